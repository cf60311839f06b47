#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>
#include <json.hpp>

#include "mcjc/mcjc.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kParams = R"({"L": 4, "n_max": 2, "g_l": 0.015, "g_r": 0.015})";

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mcjc_capi_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mcjc_string_free(s);
  return out;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + MCJC_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version and errors") {
  CHECK(std::string(mcjc_version()).size() > 0);
  mcjc_params_t p = nullptr;
  CHECK(mcjc_params_from_json(R"({"L": 4, "bogus": 1})", &p) == MCJC_ERR_CONFIG);
  CHECK(p == nullptr);
  CHECK(std::string(mcjc_last_error()).find("bogus") != std::string::npos);
  CHECK(mcjc_params_from_json("{not json", &p) == MCJC_ERR_CONFIG);
  CHECK(mcjc_params_from_json(R"({"L": 1})", &p) == MCJC_ERR_INVALID_ARGUMENT);
  CHECK(mcjc_params_from_json(nullptr, &p) == MCJC_ERR_NULL_POINTER);
  CHECK(mcjc_params_from_json(kParams, &p) == MCJC_OK);
  CHECK(std::string(mcjc_last_error()).empty());
  double e = 0;
  CHECK(mcjc_ed_ground_state(p, 100, &e, nullptr) == MCJC_ERR_DIMENSION);
  mcjc_params_free(p);
  mcjc_params_free(nullptr);
  mcjc_state_free(nullptr);
}

TEST_CASE("parameter handles") {
  mcjc_params_t p = nullptr;
  REQUIRE(mcjc_params_from_json(kParams, &p) == MCJC_OK);
  char* text = nullptr;
  REQUIRE(mcjc_params_to_json(p, &text) == MCJC_OK);
  const auto j = json::parse(take(text));
  CHECK(j["L"] == 4);
  CHECK(j["boundary"] == "open");
  mcjc_params_free(p);
}

TEST_CASE("exact diagonalization and DMRG agree through the C interface") {
  mcjc_params_t p = nullptr;
  REQUIRE(mcjc_params_from_json(kParams, &p) == MCJC_OK);
  double e_ed = 0, res = 1;
  REQUIRE(mcjc_ed_ground_state(p, 4, &e_ed, &res) == MCJC_OK);
  CHECK(res < 1e-9);

  mcjc_state_t s = nullptr;
  REQUIRE(mcjc_dmrg_run(p, R"({"d_schedule": [100]})", 4, &s) == MCJC_OK);
  double e = 0;
  int conv = 0, cells = 0;
  CHECK(mcjc_state_energy(s, &e) == MCJC_OK);
  CHECK(mcjc_state_converged(s, &conv) == MCJC_OK);
  CHECK(mcjc_state_num_cells(s, &cells) == MCJC_OK);
  CHECK(conv == 1);
  CHECK(cells == 4);
  CHECK(e == doctest::Approx(e_ed).epsilon(1e-8));

  double nq[4], nr[4];
  CHECK(mcjc_state_densities(s, nq, nr, 4) == MCJC_OK);
  double total = 0;
  for (int i = 0; i < 4; ++i) total += nq[i] + nr[i];
  CHECK(total == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(mcjc_state_densities(s, nq, nr, 3) == MCJC_ERR_INVALID_ARGUMENT);

  double ent = -1;
  CHECK(mcjc_state_entropy(s, 4, &ent) == MCJC_OK);
  CHECK(ent > 0);
  CHECK(mcjc_state_entropy(s, 0, &ent) == MCJC_ERR_INVALID_ARGUMENT);

  char* table = nullptr;
  CHECK(mcjc_state_correlations(s, &table) != MCJC_OK);  // L = 4 is below the minimum window
  double sf = 0;
  CHECK(mcjc_state_structure_factor(s, 7, &sf) == MCJC_ERR_INVALID_ARGUMENT);
  CHECK(mcjc_state_structure_factor(s, MCJC_QUBIT, &sf) == MCJC_OK);
  CHECK(std::isfinite(sf));
  mcjc_state_free(s);

  CHECK(mcjc_dmrg_run(p, R"({"d_schedule": [10, 5]})", 4, &s) == MCJC_ERR_INVALID_ARGUMENT);
  CHECK(mcjc_dmrg_run(p, R"({"bond": 5})", 4, &s) == MCJC_ERR_CONFIG);
  mcjc_params_free(p);
}

TEST_CASE("correlation table of a longer chain") {
  mcjc_params_t p = nullptr;
  REQUIRE(mcjc_params_from_json(R"({"L": 12, "n_max": 2})", &p) == MCJC_OK);
  mcjc_state_t s = nullptr;
  REQUIRE(mcjc_dmrg_run(p, R"({"d_schedule": [30]})", 12, &s) == MCJC_OK);
  char* table = nullptr;
  REQUIRE(mcjc_state_correlations(s, &table) == MCJC_OK);
  const auto j = json::parse(take(table));
  CHECK(j["gamma_q"].size() == 4);
  CHECK(j["window_lo"] == 3);
  mcjc_state_free(s);
  mcjc_params_free(p);
}

TEST_CASE("driver entry points") {
  const auto dir = fresh_dir("driver");
  const std::string job = std::string(R"({"params": )") + kParams + R"(, "solver": "ed",
      "measure": {"correlations": false}})";
  char* rec = nullptr;
  REQUIRE(mcjc_run_job(job.c_str(), dir.c_str(), 0, &rec) == MCJC_OK);
  const auto r = json::parse(take(rec));
  double e = 0;
  mcjc_params_t p = nullptr;
  mcjc_params_from_json(kParams, &p);
  mcjc_ed_ground_state(p, 4, &e, nullptr);
  mcjc_params_free(p);
  CHECK(r["energy"].get<double>() == doctest::Approx(e).epsilon(1e-12));
  CHECK(mcjc_run_job(R"({"params": {"L": 4}, "colour": 1})", dir.c_str(), 0, nullptr) == MCJC_ERR_CONFIG);

  const std::string ed = std::string(R"({"params": )") + kParams + R"(, "N": 4})";
  REQUIRE(mcjc_ed_record(ed.c_str(), dir.c_str(), &rec) == MCJC_OK);
  const auto er = json::parse(take(rec));
  for (const char* k : {"params", "N", "energy", "residual", "iterations"}) CHECK(er.contains(k));
  CHECK(er.size() == 5);
  CHECK(fs::exists(dir / "ed"));
  CHECK(mcjc_analyze((dir / "nothing").c_str(), nullptr) == MCJC_ERR_IO);
  fs::remove_all(dir);
}

TEST_CASE("command line") {
  const auto dir = fresh_dir("cli");
  write(dir / "ed.json", std::string(R"({"params": )") + kParams + R"(, "N": 4})");
  CHECK(run_cli("ed --config " + (dir / "ed.json").string()) == 0);
  CHECK(run_cli("ed --config " + (dir / "missing.json").string()) != 0);
  write(dir / "bad.json", R"({"params": {"L": 4, "omega": 1}, "N": 4})");
  CHECK(run_cli("ed --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("frobnicate") != 0);

  write(dir / "job.json", std::string(R"({"params": )") + kParams + R"(, "sweep": {"d_schedule": [40]},
      "measure": {"correlations": false}})");
  CHECK(run_cli("run --config " + (dir / "job.json").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(run_cli("run --config " + (dir / "job.json").string() + " --out " + (dir / "out").string() + " --resume") == 0);

  // scratch directory from the environment
  write(dir / "spill.json", R"({"params": {"L": 12, "n_max": 2}, "sweep": {"d_schedule": [30],
      "memory_budget_bytes": 10000}, "measure": {"correlations": false}})");
  CHECK(run_cli("run --config " + (dir / "spill.json").string() + " --out " + (dir / "out").string(),
                "MCJC_SCRATCH=" + (dir / "scratch").string()) == 0);
  CHECK(fs::exists(dir / "scratch"));

  // sweep killed before a rename, then resumed
  write(dir / "sweep.json", R"({"base": {"params": {"n_max": 2}, "sweep": {"d_schedule": [20]},
      "measure": {"r_max": 3}}, "sizes": [8, 10, 12], "points": 3, "ln_ratio_min": -1, "ln_ratio_max": 1})");
  const std::string sweep = "sweep --config " + (dir / "sweep.json").string() + " --out " + (dir / "sw").string();
  CHECK(run_cli(sweep, "MCJC_TEST_KILL_BEFORE_RENAME=15") == 137);
  int before = 0;
  for (const auto& e : fs::directory_iterator(dir / "sw" / "records"))
    if (e.path().extension() == ".json") ++before;
  CHECK(before > 0);
  CHECK(before < 27);
  CHECK(run_cli(sweep + " --resume --jobs 2") == 0);
  int after = 0;
  for (const auto& e : fs::directory_iterator(dir / "sw" / "records")) {
    if (e.path().extension() == ".json") ++after;
    CHECK(e.path().filename().string().find(".tmp-") == std::string::npos);
  }
  CHECK(after == 27);
  CHECK(fs::exists(dir / "sw" / "summary.csv"));
  CHECK(run_cli("analyze --out " + (dir / "sw").string()) == 0);
  fs::remove_all(dir);
}

}
