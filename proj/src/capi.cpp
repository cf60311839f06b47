#include "mcjc/mcjc.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "mcjc/dmrg.hpp"
#include "mcjc/driver.hpp"
#include "mcjc/error.hpp"
#include "mcjc/exact_diag.hpp"
#include "mcjc/observables.hpp"
#include "mcjc/records.hpp"

struct mcjc_params_s {
  mcjc::model::ModelParams p;
};

struct mcjc_state_s {
  mcjc::model::ModelParams p;
  mcjc::dmrg::GroundStateResult r;
};

namespace {

thread_local std::string g_last_error;

int status_of(mcjc::ErrorCode c) {
  switch (c) {
    case mcjc::ErrorCode::invalid_argument: return MCJC_ERR_INVALID_ARGUMENT;
    case mcjc::ErrorCode::config: return MCJC_ERR_CONFIG;
    case mcjc::ErrorCode::dimension: return MCJC_ERR_DIMENSION;
    case mcjc::ErrorCode::convergence: return MCJC_ERR_CONVERGENCE;
    case mcjc::ErrorCode::io: return MCJC_ERR_IO;
    case mcjc::ErrorCode::internal: return MCJC_ERR_INTERNAL;
  }
  return MCJC_ERR_INTERNAL;
}

template <typename F>
int guard(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const mcjc::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return MCJC_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MCJC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MCJC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return MCJC_ERR_INTERNAL;
  }
}

int null_error(const char* what) {
  g_last_error = std::string("null pointer: ") + what;
  return MCJC_ERR_NULL_POINTER;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse(const char* text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    mcjc::fail(mcjc::ErrorCode::config, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

extern "C" {

const char* mcjc_version(void) {
  static const std::string v = mcjc::records::software_version();
  return v.c_str();
}

const char* mcjc_last_error(void) { return g_last_error.c_str(); }

void mcjc_string_free(char* s) { std::free(s); }

int mcjc_params_from_json(const char* json, mcjc_params_t* out) {
  if (!json) return null_error("json");
  if (!out) return null_error("out");
  return guard([&] {
    auto p = mcjc::model::params_from_json(parse(json));
    *out = new mcjc_params_s{p};
    return MCJC_OK;
  });
}

int mcjc_params_to_json(mcjc_params_t params, char** out) {
  if (!params) return null_error("params");
  if (!out) return null_error("out");
  return guard([&] {
    *out = dup_string(mcjc::model::to_json(params->p).dump());
    return MCJC_OK;
  });
}

void mcjc_params_free(mcjc_params_t params) { delete params; }

int mcjc_ed_ground_state(mcjc_params_t params, int N, double* energy, double* residual) {
  if (!params) return null_error("params");
  if (!energy) return null_error("energy");
  return guard([&] {
    const auto r = mcjc::ed::ground_state(params->p, N);
    *energy = r.energy;
    if (residual) *residual = r.residual;
    return MCJC_OK;
  });
}

int mcjc_ed_record(const char* request_json, const char* out_dir, char** record_json) {
  if (!request_json) return null_error("request_json");
  if (!record_json) return null_error("record_json");
  return guard([&] {
    const auto j = parse(request_json);
    mcjc::require(j.is_object() && j.contains("params") && j.contains("N"),
                  "ed request: expected {\"params\": {...}, \"N\": n}", mcjc::ErrorCode::config);
    std::size_t cap = mcjc::model::kDefaultDimensionCap;
    for (const auto& [k, v] : j.items()) {
      if (k == "cap") cap = v.get<std::size_t>();
      else if (k != "params" && k != "N") mcjc::fail(mcjc::ErrorCode::config, "ed request: unknown key '" + k + "'");
    }
    const auto p = mcjc::model::params_from_json(j.at("params"));
    const auto rec = mcjc::driver::ed_record(p, j.at("N").get<int>(), cap);
    if (out_dir) {
      const nlohmann::json key = {{"params", mcjc::model::to_json(p)}, {"N", rec.at("N")}, {"cap", cap}};
      mcjc::records::atomic_write(std::filesystem::path(out_dir) / "ed" / (mcjc::records::config_hash(key) + ".json"),
                                  rec.dump(1) + "\n");
    }
    *record_json = dup_string(rec.dump(1));
    return MCJC_OK;
  });
}

int mcjc_dmrg_run(mcjc_params_t params, const char* sweep_json, int N, mcjc_state_t* out) {
  if (!params) return null_error("params");
  if (!out) return null_error("out");
  return guard([&] {
    mcjc::dmrg::SweepConfig c;
    if (sweep_json) c = mcjc::dmrg::sweep_config_from_json(parse(sweep_json));
    c.target_charge = N;
    auto r = mcjc::dmrg::run(params->p, c);
    *out = new mcjc_state_s{params->p, std::move(r)};
    return MCJC_OK;
  });
}

int mcjc_state_energy(mcjc_state_t state, double* energy) {
  if (!state) return null_error("state");
  if (!energy) return null_error("energy");
  *energy = state->r.energy;
  return MCJC_OK;
}

int mcjc_state_converged(mcjc_state_t state, int* converged) {
  if (!state) return null_error("state");
  if (!converged) return null_error("converged");
  *converged = state->r.converged ? 1 : 0;
  return MCJC_OK;
}

int mcjc_state_num_cells(mcjc_state_t state, int* cells) {
  if (!state) return null_error("state");
  if (!cells) return null_error("cells");
  *cells = state->p.L;
  return MCJC_OK;
}

int mcjc_state_entropy(mcjc_state_t state, int cut, double* entropy) {
  if (!state) return null_error("state");
  if (!entropy) return null_error("entropy");
  return guard([&] {
    *entropy = mcjc::dmrg::entanglement_entropy(state->r, cut);
    return MCJC_OK;
  });
}

int mcjc_state_densities(mcjc_state_t state, double* n_q, double* n_r, size_t len) {
  if (!state) return null_error("state");
  if (!n_q || !n_r) return null_error("density buffers");
  return guard([&] {
    mcjc::require(len >= static_cast<size_t>(state->p.L), "mcjc_state_densities: buffers shorter than L");
    const auto d = mcjc::obs::local_densities(*state->r.state, state->p);
    for (int i = 0; i < state->p.L; ++i) {
      n_q[i] = d.n_q[i];
      n_r[i] = d.n_r[i];
    }
    return MCJC_OK;
  });
}

int mcjc_state_correlations(mcjc_state_t state, char** table_json) {
  if (!state) return null_error("state");
  if (!table_json) return null_error("table_json");
  return guard([&] {
    const auto w = mcjc::obs::default_window(state->p);
    const auto t = mcjc::obs::correlation_table(*state->r.state, state->p, w);
    const nlohmann::json j = {{"window_lo", w.lo}, {"window_hi", w.hi}, {"r_max", w.r_max},
                              {"gamma_q", t.gamma_q}, {"gamma_r", t.gamma_r}, {"nn_q", t.nn_q},
                              {"nn_r", t.nn_r}};
    *table_json = dup_string(j.dump());
    return MCJC_OK;
  });
}

int mcjc_state_structure_factor(mcjc_state_t state, int species, double* value) {
  if (!state) return null_error("state");
  if (!value) return null_error("value");
  return guard([&] {
    mcjc::require(species == MCJC_QUBIT || species == MCJC_CAVITY, "unknown species");
    const auto s = species == MCJC_QUBIT ? mcjc::obs::Species::qubit : mcjc::obs::Species::cavity;
    *value = mcjc::obs::structure_factor(*state->r.state, state->p, s, mcjc::obs::default_window(state->p));
    return MCJC_OK;
  });
}

void mcjc_state_free(mcjc_state_t state) { delete state; }

int mcjc_run_job(const char* job_json, const char* out_dir, int resume, char** record_json) {
  if (!job_json) return null_error("job_json");
  if (!out_dir) return null_error("out_dir");
  return guard([&] {
    const auto spec = mcjc::driver::job_from_json(parse(job_json));
    const auto rec = mcjc::driver::run_job(spec, out_dir, resume != 0);
    if (record_json) *record_json = dup_string(rec.dump(1));
    return rec.value("converged", false) ? MCJC_OK : MCJC_ERR_JOB_FAILED;
  });
}

int mcjc_run_sweep(const char* sweep_json, const char* out_dir, int jobs, int resume, char** outcome_json) {
  if (!sweep_json) return null_error("sweep_json");
  if (!out_dir) return null_error("out_dir");
  return guard([&] {
    const auto spec = mcjc::driver::sweep_from_json(parse(sweep_json));
    const auto o = mcjc::driver::run_sweep(spec, out_dir, jobs, resume != 0);
    if (outcome_json) {
      const nlohmann::json j = {{"total", o.total},   {"ran", o.ran},           {"skipped", o.skipped},
                                {"failed", o.failed}, {"failures", o.failures}, {"points", o.summary.size()}};
      *outcome_json = dup_string(j.dump(1));
    }
    if (o.failed > 0) {
      g_last_error = std::to_string(o.failed) + " of " + std::to_string(o.total) + " jobs failed";
      return MCJC_ERR_JOB_FAILED;
    }
    return MCJC_OK;
  });
}

int mcjc_analyze(const char* out_dir, char** summary_json) {
  if (!out_dir) return null_error("out_dir");
  return guard([&] {
    const auto rows = mcjc::driver::analyze(out_dir);
    if (summary_json) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : rows) {
        auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
        j.push_back({{"ln_ratio", r.ln_ratio}, {"mu_p", num(r.mu_p)}, {"mu_h", num(r.mu_h)}, {"gap", num(r.gap)},
                     {"xi_q", num(r.xi_q)},     {"xi_r", num(r.xi_r)}, {"y_q", num(r.y_q)},   {"y_r", num(r.y_r)},
                     {"K0_q", num(r.K0_q)},     {"K0_r", num(r.K0_r)}, {"flags", r.flags}});
      }
      *summary_json = dup_string(j.dump(1));
    }
    return MCJC_OK;
  });
}

}  // extern "C"
