#include "mcjc/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "mcjc/error.hpp"
#include "mcjc/exact_diag.hpp"
#include "mcjc/observables.hpp"
#include "mcjc/records.hpp"

namespace mcjc::driver {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string solver_name(Solver s) { return s == Solver::ed ? "ed" : "dmrg"; }

Solver solver_from(const std::string& s) {
  if (s == "ed") return Solver::ed;
  if (s == "dmrg") return Solver::dmrg;
  fail(ErrorCode::config, "unknown solver '" + s + "' (expected ed or dmrg)");
}

json to_json(const Measurements& m) {
  return {{"densities", m.densities}, {"correlations", m.correlations}, {"structure_factor", m.structure_factor},
          {"fits", m.fits},           {"r_min", m.r_min},               {"r_max", m.r_max}};
}

Measurements measurements_from_json(const json& j) {
  require(j.is_object(), "measure: expected an object", ErrorCode::config);
  Measurements m;
  for (const auto& [k, v] : j.items()) {
    if (k == "densities") m.densities = v.get<bool>();
    else if (k == "correlations") m.correlations = v.get<bool>();
    else if (k == "structure_factor") m.structure_factor = v.get<bool>();
    else if (k == "fits") m.fits = v.get<bool>();
    else if (k == "r_min") m.r_min = v.get<int>();
    else if (k == "r_max") m.r_max = v.get<int>();
    else fail(ErrorCode::config, "measure: unknown key '" + k + "'");
  }
  return m;
}

std::pair<int, int> parse_filling(const json& v) {
  if (v.is_number_integer()) return {v.get<int>(), 1};
  require(v.is_string(), "filling: expected \"p/q\" or an integer", ErrorCode::config);
  const auto s = v.get<std::string>();
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return {std::stoi(s), 1};
    return {std::stoi(s.substr(0, slash)), std::stoi(s.substr(slash + 1))};
  } catch (const std::exception&) {
    fail(ErrorCode::config, "filling: cannot parse '" + s + "'");
  }
}

double json_number(const json& j) { return j.is_number() ? j.get<double>() : kNaN; }

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string fmt(double x) {
  if (!std::isfinite(x)) return "nan";
  std::ostringstream s;
  s.precision(12);
  s << x;
  return s.str();
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

json density_json(const obs::DensityProfile& d, const obs::Window& w) {
  return {{"n_q", d.n_q},
          {"n_r", d.n_r},
          {"total", d.total()},
          {"window_lo", w.lo},
          {"window_hi", w.hi},
          {"window_mean_q", d.mean_q(w.lo, w.hi)},
          {"window_mean_r", d.mean_r(w.lo, w.hi)}};
}

/// Exponential and power-law fits of one species, with a window-shift check.
void fit_species(const std::vector<double>& gamma, const Measurements& m, const std::string& tag, json& fits,
                 std::vector<std::string>& flags) {
  const analysis::FitWindow w{m.r_min, m.r_max}, shifted{m.r_min + 1, m.r_max};
  try {
    const auto f = analysis::fit_exponential(gamma, w);
    fits["exp_" + tag] = analysis::to_json(f);
    try {
      const auto g = analysis::fit_exponential(gamma, shifted);
      if (std::abs(g.value("xi") - f.value("xi")) > f.error("xi")) flags.push_back("window_sensitive_xi_" + tag);
    } catch (const Error&) {
      flags.push_back("window_sensitive_xi_" + tag);
    }
  } catch (const Error& e) {
    fits["exp_" + tag] = {{"error", e.what()}};
  }
  try {
    const auto f = analysis::fit_luttinger(gamma, w);
    fits["luttinger_" + tag] = analysis::to_json(f);
    try {
      const auto g = analysis::fit_luttinger(gamma, shifted);
      if (std::abs(g.value("K") - f.value("K")) > f.error("K")) flags.push_back("window_sensitive_K_" + tag);
    } catch (const Error&) {
      flags.push_back("window_sensitive_K_" + tag);
    }
  } catch (const Error& e) {
    fits["luttinger_" + tag] = {{"error", e.what()}};
  }
}

obs::Window measurement_window(const JobSpec& s) {
  obs::Window w = obs::default_window(s.params);
  if (s.measure.r_max >= 0) w.r_max = s.measure.r_max;
  return w;
}

}  // namespace

int JobSpec::N() const {
  return filling_num * params.L / filling_den + charge_offset;
}

void JobSpec::validate() const {
  try {
    params.validate();
    sweep.validate();
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  require(filling_den > 0 && filling_num >= 0, "JobSpec: filling must be a nonnegative fraction", ErrorCode::config);
  require((filling_num * params.L) % filling_den == 0,
          "JobSpec: filling " + std::to_string(filling_num) + "/" + std::to_string(filling_den) + " times L=" +
              std::to_string(params.L) + " is not an integer",
          ErrorCode::config);
  const int n = N();
  require(n >= 0 && n <= params.max_charge(), "JobSpec: N=" + std::to_string(n) + " outside the charge range",
          ErrorCode::config);
  require(measure.r_min >= 0, "JobSpec: r_min must be nonnegative", ErrorCode::config);
  if (solver == Solver::ed) {
    model::ProductSpace space(params);
    // Throws Error(dimension) above the cap.
    (void)space.enumerate(n, ed_cap);
  }
}

json to_json(const JobSpec& s) {
  json sweep = dmrg::to_json(s.sweep);
  sweep.erase("target_charge");
  return {{"params", model::to_json(s.params)},
          {"filling", std::to_string(s.filling_num) + "/" + std::to_string(s.filling_den)},
          {"charge_offset", s.charge_offset},
          {"solver", solver_name(s.solver)},
          {"sweep", sweep},
          {"measure", to_json(s.measure)},
          {"ed_cap", s.ed_cap}};
}

JobSpec job_from_json(const json& j) {
  require(j.is_object(), "JobSpec: expected a JSON object", ErrorCode::config);
  JobSpec s;
  try {
    bool has_params = false;
    for (const auto& [k, v] : j.items()) {
      if (k == "params") {
        s.params = model::params_from_json(v);
        has_params = true;
      } else if (k == "filling") {
        std::tie(s.filling_num, s.filling_den) = parse_filling(v);
      } else if (k == "charge_offset") {
        s.charge_offset = v.get<int>();
      } else if (k == "solver") {
        s.solver = solver_from(v.get<std::string>());
      } else if (k == "sweep") {
        s.sweep = dmrg::sweep_config_from_json(v);
      } else if (k == "measure") {
        s.measure = measurements_from_json(v);
      } else if (k == "ed_cap") {
        s.ed_cap = v.get<std::size_t>();
      } else {
        fail(ErrorCode::config, "JobSpec: unknown key '" + k + "'");
      }
    }
    require(has_params, "JobSpec: missing 'params'", ErrorCode::config);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("JobSpec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string job_hash(const JobSpec& s) {
  json j = to_json(s);
  j["sweep"].erase("scratch_dir");
  return records::config_hash(j);
}

fs::path record_path(const fs::path& out_dir, const JobSpec& s) { return out_dir / "records" / (job_hash(s) + ".json"); }

json run_job(const JobSpec& spec_in, const fs::path& out_dir, bool resume) {
  spec_in.validate();
  JobSpec spec = spec_in;
  const int N = spec.N();
  spec.sweep.target_charge = N;
  const std::string hash = job_hash(spec_in);
  const fs::path path = record_path(out_dir, spec_in);
  if (resume && fs::exists(path)) {
    try {
      json old = records::read_json(path);
      if (old.value("config_hash", "") == hash) return old;
    } catch (const Error&) {
      // unreadable record: recompute
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  json rec;
  rec["software_version"] = records::software_version();
  rec["config_hash"] = hash;
  rec["spec"] = to_json(spec_in);
  rec["N"] = N;
  rec["L"] = spec.params.L;
  std::vector<std::string> flags;
  const fs::path corr_path = out_dir / "records" / (hash + "_corr.csv");
  const obs::Window w = measurement_window(spec);

  auto measure_all = [&](auto&& densities, auto&& table, auto&& sfactor) {
    if (spec.measure.densities) rec["densities"] = density_json(densities(), w);
    if (spec.measure.correlations) {
      const obs::CorrelationTable t = table();
      obs::write_correlation_csv(corr_path, t);
      rec["correlations_csv"] = corr_path.filename().string();
      rec["window"] = {{"lo", w.lo}, {"hi", w.hi}, {"r_max", w.r_max}, {"wrap", w.wrap}};
      if (spec.measure.fits) {
        json fits = json::object();
        fit_species(t.gamma_q, spec.measure, "q", fits, flags);
        fit_species(t.gamma_r, spec.measure, "r", fits, flags);
        rec["fits"] = fits;
      }
    }
    if (spec.measure.structure_factor)
      rec["structure_factor"] = {{"qubit", sfactor(obs::Species::qubit)}, {"cavity", sfactor(obs::Species::cavity)}};
  };
  auto measure = [&](auto&& densities, auto&& table, auto&& sfactor) {
    try {
      measure_all(densities, table, sfactor);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::io) throw;
      rec["measurement_error"] = e.what();
      flags.push_back("measurement_failed");
    }
  };

  try {
    if (spec.solver == Solver::ed) {
      const ed::SectorBasis basis(spec.params, N, spec.ed_cap);
      ed::EdOptions opts;
      opts.cap = spec.ed_cap;
      const auto r = ed::ground_state(basis, opts);
      rec["energy"] = r.energy;
      rec["converged"] = r.converged;
      rec["ed"] = {{"residual", r.residual},
                   {"iterations", r.iterations},
                   {"dimension", basis.dim()},
                   {"degenerate", r.degenerate},
                   {"second_energy", number_or_null(r.second_energy)}};
      measure([&] { return obs::local_densities(basis, r.vector); },
              [&] { return obs::correlation_table(basis, r.vector, w); },
              [&](obs::Species s) { return obs::structure_factor(basis, r.vector, s, w); });
    } else {
      // An open chain is cut at its weak bond: with g_l > g_r the solved
      // chain is the mirror image, which swaps the two couplings.
      model::ModelParams solved = spec.params;
      const bool mirrored = solved.boundary == model::Boundary::open && solved.g_l > solved.g_r;
      if (mirrored) std::swap(solved.g_l, solved.g_r);
      rec["mirrored"] = mirrored;
      const auto r = dmrg::run(solved, spec.sweep);
      rec["energy"] = r.energy;
      rec["converged"] = r.converged;
      if (!r.converged) flags.push_back("not_converged");
      json sweeps = json::array();
      for (const auto& s : r.sweeps)
        sweeps.push_back({{"bond_dim", s.bond_dim},
                          {"energy", s.energy},
                          {"max_truncation", s.max_truncation},
                          {"max_kept", s.max_kept},
                          {"seconds", s.seconds}});
      rec["dmrg"] = {{"n_sweeps", r.n_sweeps_used},
                     {"sweeps", sweeps},
                     {"truncation_error_per_sweep", r.truncation_error_per_sweep},
                     {"max_bond_dim", r.state->max_bond_dim()},
                     {"spills", r.spills}};
      rec["entropy"] = {{"profile", r.entropy_profile},
                        {"midpoint", r.entropy_profile[spec.params.num_sites() / 2 - 1]}};
      const dmrg::Mps& st = *r.state;
      measure([&] { return obs::local_densities(st, solved); }, [&] { return obs::correlation_table(st, solved, w); },
              [&](obs::Species s) { return obs::structure_factor(st, solved, s, w); });
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io || e.code() == ErrorCode::config) throw;
    rec["converged"] = false;
    rec["error"] = e.what();
    flags.push_back("solver_failed");
  }
  rec["flags"] = flags;
  rec["timing"] = {{"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                   {"peak_rss_kb", records::peak_rss_kb()},
                   {"timestamp", records::utc_timestamp()}};
  records::atomic_write(path, rec.dump(1) + "\n");
  return rec;
}

json ed_record(const model::ModelParams& p, int N, std::size_t cap) {
  ed::EdOptions opts;
  opts.cap = cap;
  const auto r = ed::ground_state(p, N, opts);
  return {{"params", model::to_json(p)},
          {"N", N},
          {"energy", r.energy},
          {"residual", r.residual},
          {"iterations", r.iterations}};
}

json to_json(const SweepSpec& s) {
  json j = {{"base", to_json(s.base)},
            {"sizes", s.sizes},
            {"coupling_sum", s.coupling_sum},
            {"ln_ratio_min", s.ln_ratio_min},
            {"ln_ratio_max", s.ln_ratio_max},
            {"points", s.points},
            {"chemical_potentials", s.chemical_potentials}};
  if (!s.ln_ratios.empty()) j["ln_ratios"] = s.ln_ratios;
  return j;
}

SweepSpec sweep_from_json(const json& j) {
  require(j.is_object(), "SweepSpec: expected a JSON object", ErrorCode::config);
  SweepSpec s;
  try {
    json base;
    for (const auto& [k, v] : j.items()) {
      if (k == "base") base = v;
      else if (k == "sizes") s.sizes = v.get<std::vector<int>>();
      else if (k == "coupling_sum") s.coupling_sum = v.get<double>();
      else if (k == "ln_ratio_min") s.ln_ratio_min = v.get<double>();
      else if (k == "ln_ratio_max") s.ln_ratio_max = v.get<double>();
      else if (k == "points") s.points = v.get<int>();
      else if (k == "ln_ratios") s.ln_ratios = v.get<std::vector<double>>();
      else if (k == "chemical_potentials") s.chemical_potentials = v.get<bool>();
      else fail(ErrorCode::config, "SweepSpec: unknown key '" + k + "'");
    }
    require(!s.sizes.empty(), "SweepSpec: 'sizes' is required", ErrorCode::config);
    require(base.is_object() && base.contains("params"), "SweepSpec: 'base' with 'params' is required",
            ErrorCode::config);
    // Sizes and couplings come from the grid; fill them in before the strict parse.
    base["params"]["L"] = s.sizes.front();
    s.base = job_from_json(base);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("SweepSpec: ") + e.what());
  }
  require(s.ln_ratios.empty() ? s.points >= 1 : true, "SweepSpec: points must be positive", ErrorCode::config);
  return s;
}

std::vector<SweepJob> expand(const SweepSpec& s) {
  std::vector<analysis::CouplingPoint> grid;
  if (!s.ln_ratios.empty()) {
    for (double x : s.ln_ratios) {
      const auto g = analysis::fixed_sum_grid(s.coupling_sum, x, x, 1);
      grid.push_back(g[0]);
    }
  } else {
    grid = analysis::fixed_sum_grid(s.coupling_sum, s.ln_ratio_min, s.ln_ratio_max, s.points);
  }
  std::vector<int> offsets{0};
  if (s.chemical_potentials) offsets = {-1, 0, 1};
  std::vector<SweepJob> out;
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (int L : s.sizes)
      for (int off : offsets) {
        SweepJob job;
        job.point = static_cast<int>(p);
        job.ln_ratio = grid[p].ln_ratio;
        job.L = L;
        job.offset = off;
        job.spec = s.base;
        job.spec.params.L = L;
        job.spec.params.g_l = grid[p].g_l;
        job.spec.params.g_r = grid[p].g_r;
        job.spec.charge_offset = off;
        job.spec.validate();
        job.hash = job_hash(job.spec);
        out.push_back(std::move(job));
      }
  return out;
}

SweepOutcome run_sweep(const SweepSpec& s, const fs::path& out_dir, int jobs, bool resume) {
  require(jobs >= 1, "run_sweep: --jobs must be at least 1", ErrorCode::config);
  const auto all = expand(s);
  fs::create_directories(out_dir / "records");
  records::remove_stale_temporaries(out_dir / "records");
  records::remove_stale_temporaries(out_dir);

  json manifest;
  manifest["software_version"] = records::software_version();
  manifest["sweep"] = to_json(s);
  manifest["jobs"] = json::array();
  for (const auto& j : all)
    manifest["jobs"].push_back(
        {{"point", j.point}, {"ln_ratio", j.ln_ratio}, {"L", j.L}, {"offset", j.offset}, {"hash", j.hash}});
  records::atomic_write(out_dir / "sweep_manifest.json", manifest.dump(1) + "\n");

  SweepOutcome outcome;
  outcome.total = static_cast<int>(all.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= all.size()) return;
      const auto& job = all[i];
      bool had = false;
      if (resume) {
        const fs::path p = record_path(out_dir, job.spec);
        if (fs::exists(p)) {
          try {
            had = records::read_json(p).value("config_hash", "") == job.hash;
          } catch (const Error&) {
          }
        }
      }
      std::string failure;
      try {
        const json rec = run_job(job.spec, out_dir, resume);
        if (!rec.value("converged", false))
          failure = job.hash + ": " + rec.value("error", std::string("not converged"));
      } catch (const std::exception& e) {
        failure = job.hash + ": " + e.what();
      }
      std::lock_guard<std::mutex> lock(mu);
      if (had) ++outcome.skipped;
      else ++outcome.ran;
      if (!failure.empty()) {
        ++outcome.failed;
        outcome.failures.push_back(failure);
      }
    }
  };
  const int n = std::min<int>(jobs, std::max<int>(1, outcome.total));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::sort(outcome.failures.begin(), outcome.failures.end());
  outcome.summary = analyze(out_dir);
  return outcome;
}

namespace {

struct PlotWriter {
  std::ostringstream s;
  PlotWriter() {
    s.precision(12);
    s << "x,y,series\n";
  }
  void add(double x, double y, const std::string& series) {
    if (std::isfinite(x) && std::isfinite(y)) s << x << ',' << y << ',' << series << '\n';
  }
  void save(const fs::path& p) { records::atomic_write(p, s.str()); }
};

std::string xlabel(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

}  // namespace

std::vector<SummaryRow> analyze(const fs::path& out_dir) {
  const json manifest = records::read_json(out_dir / "sweep_manifest.json");
  const SweepSpec spec = sweep_from_json(manifest.at("sweep"));
  const auto jobs = expand(spec);
  const Measurements& m = spec.base.measure;

  // point -> L -> offset -> record
  std::map<int, std::map<int, std::map<int, json>>> recs;
  std::map<int, double> ratio;
  std::vector<std::string> missing;
  for (const auto& j : jobs) {
    ratio[j.point] = j.ln_ratio;
    const fs::path p = out_dir / "records" / (j.hash + ".json");
    if (!fs::exists(p)) {
      missing.push_back(j.hash);
      continue;
    }
    recs[j.point][j.L][j.offset] = records::read_json(p);
  }

  PlotWriter p_gap, p_mu, p_xi, p_y, p_k, p_k_inv, p_sf, p_gamma, p_dens, p_mu_inv, p_entropy;
  std::vector<SummaryRow> rows;
  json details = json::array();
  for (const auto& [point, x] : ratio) {
    SummaryRow row;
    row.ln_ratio = x;
    row.mu_p = row.mu_h = row.gap = row.xi_q = row.xi_r = row.y_q = row.y_r = row.K0_q = row.K0_r = kNaN;
    std::vector<std::string>& flags = row.flags;
    json det = {{"ln_ratio", x}, {"sizes", json::array()}};
    const auto& by_L = recs[point];

    std::vector<analysis::SizeEnergies> energies;
    std::vector<std::pair<int, double>> k_q, k_r;
    bool complete = true, converged = true;
    int largest = -1;
    for (int L : spec.sizes) {
      json size = {{"L", L}};
      auto it = by_L.find(L);
      if (it == by_L.end() || !it->second.count(0)) {
        complete = false;
        det["sizes"].push_back(size);
        continue;
      }
      const auto& offs = it->second;
      const json& r0 = offs.at(0);
      if (!r0.value("converged", false)) converged = false;
      size["energy"] = r0.value("energy", kNaN);
      if (r0.contains("densities")) {
        size["n_q"] = r0["densities"]["window_mean_q"];
        size["n_r"] = r0["densities"]["window_mean_r"];
        p_dens.add(x, r0["densities"]["window_mean_q"].get<double>(), "n_q_L" + std::to_string(L));
        p_dens.add(x, r0["densities"]["window_mean_r"].get<double>(), "n_r_L" + std::to_string(L));
      }
      if (r0.contains("structure_factor")) {
        size["S_q"] = r0["structure_factor"]["qubit"];
        size["S_r"] = r0["structure_factor"]["cavity"];
        p_sf.add(1.0 / L, r0["structure_factor"]["qubit"].get<double>(), "S_q_x" + xlabel(x));
        p_sf.add(1.0 / L, r0["structure_factor"]["cavity"].get<double>(), "S_r_x" + xlabel(x));
      }
      if (r0.contains("entropy"))
        p_entropy.add(x, r0["entropy"]["midpoint"].get<double>(), "S_mid_L" + std::to_string(L));
      if (spec.chemical_potentials) {
        if (offs.count(-1) && offs.count(1)) {
          analysis::SizeEnergies e;
          e.L = L;
          e.N = r0.value("N", 0);
          e.e_minus = json_number(offs.at(-1).value("energy", json()));
          e.e_zero = json_number(r0.value("energy", json()));
          e.e_plus = json_number(offs.at(1).value("energy", json()));
          e.converged = offs.at(-1).value("converged", false) && r0.value("converged", false) &&
                        offs.at(1).value("converged", false);
          if (!e.converged) converged = false;
          size["mu_p"] = number_or_null(e.e_plus - e.e_zero);
          size["mu_h"] = number_or_null(e.e_zero - e.e_minus);
          p_mu_inv.add(1.0 / L, e.e_plus - e.e_zero, "mu_p_x" + xlabel(x));
          p_mu_inv.add(1.0 / L, e.e_zero - e.e_minus, "mu_h_x" + xlabel(x));
          p_mu.add(x, e.e_plus - e.e_zero, "mu_p_L" + std::to_string(L));
          p_mu.add(x, e.e_zero - e.e_minus, "mu_h_L" + std::to_string(L));
          energies.push_back(e);
        } else {
          complete = false;
        }
      }
      if (r0.contains("correlations_csv")) {
        const auto t = obs::read_correlation_csv(out_dir / "records" / r0["correlations_csv"].get<std::string>());
        largest = std::max(largest, L);
        for (auto [tag, g, dst] : {std::tuple{"q", &t.gamma_q, &k_q}, std::tuple{"r", &t.gamma_r, &k_r}}) {
          try {
            const auto f = analysis::fit_luttinger(*g, {m.r_min, m.r_max});
            dst->emplace_back(L, f.value("K"));
            size[std::string("K_") + tag] = f.value("K");
            p_k.add(x, f.value("K"), std::string("K_") + tag + "_L" + std::to_string(L));
            p_k_inv.add(1.0 / L, f.value("K"), std::string("K_") + tag + "_x" + xlabel(x));
          } catch (const Error&) {
            flags.push_back(std::string("luttinger_fit_failed_") + tag + "_L" + std::to_string(L));
          }
        }
      }
      det["sizes"].push_back(size);
    }
    if (!complete) flags.push_back("missing_records");
    if (!converged) flags.push_back("not_converged");

    if (spec.chemical_potentials) {
      try {
        const auto c = analysis::chemical_potentials(energies);
        row.mu_p = c.mu_p_inf;
        row.mu_h = c.mu_h_inf;
        row.gap = c.gap;
        det["fit_mu_p"] = analysis::to_json(c.fit_p);
        det["fit_mu_h"] = analysis::to_json(c.fit_h);
      } catch (const Error&) {
        flags.push_back("chemical_potentials_unavailable");
      }
    }
    p_gap.add(x, row.gap, "gap");
    p_mu.add(x, row.mu_p, "mu_p_inf");
    p_mu.add(x, row.mu_h, "mu_h_inf");

    if (largest > 0) {
      const json& r0 = by_L.at(largest).at(0);
      const auto t = obs::read_correlation_csv(out_dir / "records" / r0["correlations_csv"].get<std::string>());
      for (auto [tag, g, xi, y] : {std::tuple{"q", &t.gamma_q, &row.xi_q, &row.y_q},
                                   std::tuple{"r", &t.gamma_r, &row.xi_r, &row.y_r}}) {
        try {
          const auto f = analysis::fit_exponential(*g, {m.r_min, m.r_max});
          *xi = f.value("xi");
          *y = f.value("y");
          det[std::string("fit_exp_") + tag] = analysis::to_json(f);
          try {
            const auto s2 = analysis::fit_exponential(*g, {m.r_min + 1, m.r_max});
            if (std::abs(s2.value("xi") - f.value("xi")) > f.error("xi"))
              flags.push_back(std::string("window_sensitive_xi_") + tag);
          } catch (const Error&) {
            flags.push_back(std::string("window_sensitive_xi_") + tag);
          }
        } catch (const Error&) {
          flags.push_back(std::string("exp_fit_failed_") + tag);
        }
        const double g0 = (*g)[0];
        for (std::size_t r = 0; r < g->size(); ++r)
          p_gamma.add(static_cast<double>(r), (*g)[r] / g0,
                      std::string("gamma_") + tag + "_x" + xlabel(x) + "_L" + std::to_string(largest));
      }
    }
    for (auto [tag, ks, k0] : {std::tuple{"q", &k_q, &row.K0_q}, std::tuple{"r", &k_r, &row.K0_r}}) {
      try {
        const auto f = analysis::extrapolate_inverse_L(*ks);
        *k0 = f.value("intercept");
        det[std::string("fit_K0_") + tag] = analysis::to_json(f);
      } catch (const Error&) {
        flags.push_back(std::string("K0_unavailable_") + tag);
      }
    }
    p_xi.add(x, row.xi_q, "xi_q");
    p_xi.add(x, row.xi_r, "xi_r");
    p_y.add(x, row.y_q, "y_q");
    p_y.add(x, row.y_r, "y_r");
    p_k.add(x, row.K0_q, "K0_q");
    p_k.add(x, row.K0_r, "K0_r");
    det["flags"] = flags;
    details.push_back(det);
    rows.push_back(row);
  }

  std::ostringstream csv;
  csv << "ln_ratio,mu_p,mu_h,gap,xi_q,xi_r,y_q,y_r,K0_q,K0_r,flags\n";
  for (const auto& r : rows)
    csv << fmt(r.ln_ratio) << ',' << fmt(r.mu_p) << ',' << fmt(r.mu_h) << ',' << fmt(r.gap) << ',' << fmt(r.xi_q)
        << ',' << fmt(r.xi_r) << ',' << fmt(r.y_q) << ',' << fmt(r.y_r) << ',' << fmt(r.K0_q) << ','
        << fmt(r.K0_r) << ',' << join(r.flags, ";") << '\n';
  records::atomic_write(out_dir / "summary.csv", csv.str());

  json summary = {{"software_version", records::software_version()},
                  {"points", details},
                  {"missing_records", missing}};
  std::vector<std::pair<double, double>> kq, kr;
  for (const auto& r : rows) {
    if (std::isfinite(r.K0_q)) kq.emplace_back(r.ln_ratio, r.K0_q);
    if (std::isfinite(r.K0_r)) kr.emplace_back(r.ln_ratio, r.K0_r);
  }
  for (auto [tag, ks] : {std::pair{"q", &kq}, std::pair{"r", &kr}}) {
    try {
      summary[std::string("critical_ratios_") + tag] = analysis::detect_critical_points(*ks);
    } catch (const Error& e) {
      summary[std::string("critical_ratios_") + tag] = {{"error", e.what()}};
    }
  }
  records::atomic_write(out_dir / "summary.json", summary.dump(1) + "\n");

  const fs::path plots = out_dir / "plots";
  p_gap.save(plots / "gap.csv");
  p_mu.save(plots / "chemical_potentials.csv");
  p_mu_inv.save(plots / "chemical_potentials_vs_inverse_L.csv");
  p_xi.save(plots / "correlation_length.csv");
  p_y.save(plots / "correlation_offset.csv");
  p_k.save(plots / "luttinger.csv");
  p_k_inv.save(plots / "luttinger_vs_inverse_L.csv");
  p_sf.save(plots / "structure_factor_vs_inverse_L.csv");
  p_gamma.save(plots / "density_matrix.csv");
  p_dens.save(plots / "densities.csv");
  p_entropy.save(plots / "entropy_midpoint.csv");
  return rows;
}

}  // namespace mcjc::driver
