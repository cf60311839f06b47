#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>

#include "mcjc/driver.hpp"
#include "mcjc/error.hpp"
#include "mcjc/exact_diag.hpp"
#include "mcjc/jc_cell.hpp"
#include "mcjc/records.hpp"
#include "oracles.hpp"

using namespace mcjc;
using namespace mcjc::driver;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mcjc_driver_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

JobSpec small_job(Solver solver) {
  JobSpec s;
  s.params.L = 4;
  s.params.n_max = 2;
  s.params.g_l = 0.015;
  s.params.g_r = 0.015;
  s.solver = solver;
  s.sweep.d_schedule = {100};
  s.measure.correlations = false;
  return s;
}

json sweep_json() {
  return json::parse(R"({
    "base": {"params": {"n_max": 2}, "filling": "1/1", "solver": "dmrg",
             "sweep": {"d_schedule": [20], "noise": [1e-4]},
             "measure": {"r_max": 3}},
    "sizes": [8, 10, 12], "points": 3, "ln_ratio_min": -1.0, "ln_ratio_max": 1.0})");
}

json strip_volatile(json r) {
  r.erase("timing");
  if (r.contains("dmrg"))
    for (auto& s : r["dmrg"]["sweeps"]) s.erase("seconds");
  return r;
}

}  // namespace

TEST_SUITE("driver") {

TEST_CASE("job JSON round trip and strictness") {
  auto s = small_job(Solver::dmrg);
  s.filling_num = 1;
  s.filling_den = 2;
  const auto back = job_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
  CHECK(back.N() == 2);

  auto j = to_json(s);
  j["extra"] = 1;
  CHECK_THROWS_AS(job_from_json(j), Error);
  j = to_json(s);
  j["params"]["gl"] = 0.1;
  try {
    job_from_json(j);
    FAIL("accepted an unknown parameter");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
  }
  j = to_json(s);
  j["filling"] = 1;
  CHECK(job_from_json(j).N() == 4);
  j["filling"] = 0.5;
  CHECK_THROWS_AS(job_from_json(j), Error);
}

TEST_CASE("job validation") {
  auto s = small_job(Solver::dmrg);
  s.params.L = 5;
  s.filling_num = 1;
  s.filling_den = 2;
  CHECK_THROWS_AS(s.validate(), Error);
  s = small_job(Solver::ed);
  s.ed_cap = 10;
  try {
    s.validate();
    FAIL("cap not enforced");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dimension);
  }
  s = small_job(Solver::dmrg);
  s.charge_offset = 100;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("hash ignores the scratch directory only") {
  auto a = small_job(Solver::dmrg);
  auto b = a;
  b.sweep.scratch_dir = "/somewhere/else";
  CHECK(job_hash(a) == job_hash(b));
  b.params.g_l = 0.0151;
  CHECK(job_hash(a) != job_hash(b));
  CHECK(job_hash(a).size() == 16);
}

TEST_CASE("malformed config is rejected before any output") {
  const auto dir = fresh_dir("malformed");
  auto j = to_json(small_job(Solver::ed));
  j["sweeep"] = json::object();
  CHECK_THROWS_AS(run_job(job_from_json(j), dir), Error);
  CHECK(fs::is_empty(dir));
  fs::remove_all(dir);
}

TEST_CASE("exact diagonalization job") {
  const auto dir = fresh_dir("ed");
  const auto s = small_job(Solver::ed);
  const json rec = run_job(s, dir);
  CHECK(rec["converged"].get<bool>());
  CHECK(rec["energy"].get<double>() == doctest::Approx(oracle::sector_ground_energy(s.params, 4)).epsilon(1e-12));
  CHECK(fs::exists(record_path(dir, s)));
  CHECK(records::read_json(record_path(dir, s)) == rec);
  CHECK(rec["config_hash"] == job_hash(s));
  CHECK(rec["software_version"] == records::software_version());
  fs::remove_all(dir);
}

TEST_CASE("decoupled DMRG job") {
  const auto dir = fresh_dir("decoupled");
  auto s = small_job(Solver::dmrg);
  s.params.L = 16;
  s.params.g_l = 0.0;
  s.sweep.d_schedule = {1};
  s.measure.correlations = true;
  const json rec = run_job(s, dir);
  CHECK(std::abs(rec["energy"].get<double>() - 16 * jc::jc_eigensystem(1, s.params).e_minus) < 1e-10);
  CHECK(rec["densities"]["window_mean_q"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fs::exists(dir / "records" / rec["correlations_csv"].get<std::string>()));
  fs::remove_all(dir);
}

TEST_CASE("measurement problems do not mark the solve as failed") {
  const auto dir = fresh_dir("measure");
  auto s = small_job(Solver::ed);
  s.measure.correlations = true;  // L = 4 is too short for the default window
  const json rec = run_job(s, dir);
  CHECK(rec["converged"].get<bool>());
  CHECK(rec.contains("measurement_error"));
  fs::remove_all(dir);
}

TEST_CASE("open chains with g_l > g_r are solved mirrored") {
  const auto dir = fresh_dir("mirror");
  auto s = small_job(Solver::dmrg);
  s.params.g_l = 0.025;
  s.params.g_r = 0.005;
  const json rec = run_job(s, dir);
  CHECK(rec["mirrored"].get<bool>());
  auto swapped = s.params;
  std::swap(swapped.g_l, swapped.g_r);
  CHECK(rec["energy"].get<double>() == doctest::Approx(ed::ground_state(swapped, 4).energy).epsilon(1e-9));
  fs::remove_all(dir);
}

TEST_CASE("determinism and resume") {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  auto s = small_job(Solver::dmrg);
  s.params.L = 12;
  s.params.g_l = 0.01;
  s.params.g_r = 0.02;
  s.sweep.d_schedule = {30};
  s.measure.correlations = true;
  const json ra = run_job(s, a);
  const json rb = run_job(s, b);
  CHECK(ra["energy"].get<double>() == rb["energy"].get<double>());
  CHECK(strip_volatile(ra) == strip_volatile(rb));
  CHECK(slurp(a / "records" / ra["correlations_csv"].get<std::string>()) ==
        slurp(b / "records" / rb["correlations_csv"].get<std::string>()));

  const auto stamp = fs::last_write_time(record_path(a, s));
  const json again = run_job(s, a, true);
  CHECK(again == ra);
  CHECK(fs::last_write_time(record_path(a, s)) == stamp);

  // a record with a foreign hash is recomputed
  json forged = ra;
  forged["config_hash"] = "0000000000000000";
  records::atomic_write(record_path(a, s), forged.dump());
  CHECK(run_job(s, a, true)["config_hash"] == job_hash(s));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("atomic writes") {
  const auto dir = fresh_dir("atomic");
  records::atomic_write(dir / "x.json", "{\"a\": 1}");
  CHECK(records::read_json(dir / "x.json")["a"] == 1);
  {
    std::ofstream(dir / "x.json.tmp-1-0") << "{";
  }
  CHECK(records::remove_stale_temporaries(dir) == 1);
  CHECK_THROWS_AS(records::read_json(dir / "missing.json"), Error);
  {
    std::ofstream(dir / "bad.json") << "{";
  }
  CHECK_THROWS_AS(records::read_json(dir / "bad.json"), Error);

  const pid_t pid = fork();
  if (pid == 0) {
    ::setenv("MCJC_TEST_KILL_BEFORE_RENAME", "y.json", 1);
    records::atomic_write(dir / "y.json", "{}");
    std::_Exit(0);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  CHECK(WEXITSTATUS(status) == 137);
  CHECK_FALSE(fs::exists(dir / "y.json"));
  CHECK(records::remove_stale_temporaries(dir) == 1);
  fs::remove_all(dir);
}

TEST_CASE("sweep accounting, analysis and resume after a kill") {
  const auto spec = sweep_from_json(sweep_json());
  const auto jobs = expand(spec);
  CHECK(jobs.size() == 27);

  const auto clean = fresh_dir("sweep_clean");
  const auto outcome = run_sweep(spec, clean, 2, false);
  CHECK(outcome.total == 27);
  CHECK(outcome.ran == 27);
  CHECK(outcome.failed == 0);
  CHECK(outcome.summary.size() == 3);
  int n_records = 0;
  for (const auto& e : fs::directory_iterator(clean / "records"))
    if (e.path().extension() == ".json") ++n_records;
  CHECK(n_records == 27);
  const std::string summary = slurp(clean / "summary.csv");
  CHECK(summary.rfind("ln_ratio,mu_p,mu_h,gap,xi_q,xi_r,y_q,y_r,K0_q,K0_r,flags\n", 0) == 0);
  for (const char* plot : {"gap", "chemical_potentials", "luttinger", "densities", "structure_factor_vs_inverse_L"}) {
    const auto text = slurp(clean / "plots" / (std::string(plot) + ".csv"));
    CHECK(text.rfind("x,y,series\n", 0) == 0);
  }
  for (const auto& row : outcome.summary) {
    CHECK(std::isfinite(row.gap));
    CHECK(row.mu_p >= row.mu_h - 1e-6);
  }
  // the gap is symmetric under g_l <-> g_r
  CHECK(outcome.summary[0].gap == doctest::Approx(outcome.summary[2].gap).epsilon(0.2));

  const auto again = run_sweep(spec, clean, 1, true);
  CHECK(again.skipped == 27);
  CHECK(again.ran == 0);
  CHECK(slurp(clean / "summary.csv") == summary);

  // killed in the middle of a write, then resumed
  const auto killed = fresh_dir("sweep_killed");
  const pid_t pid = fork();
  if (pid == 0) {
    ::setenv("MCJC_TEST_KILL_BEFORE_RENAME", "20", 1);
    run_sweep(spec, killed, 1, false);
    std::_Exit(0);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  REQUIRE(WEXITSTATUS(status) == 137);
  const auto resumed = run_sweep(spec, killed, 1, true);
  CHECK(resumed.failed == 0);
  CHECK(resumed.skipped > 0);
  CHECK(resumed.ran > 0);
  CHECK(resumed.skipped + resumed.ran == 27);
  CHECK(slurp(killed / "summary.csv") == summary);
  for (const auto& e : fs::directory_iterator(killed / "records"))
    CHECK(e.path().filename().string().find(".tmp-") == std::string::npos);

  // analyze alone reproduces the summary
  fs::remove(killed / "summary.csv");
  analyze(killed);
  CHECK(slurp(killed / "summary.csv") == summary);
  fs::remove_all(clean);
  fs::remove_all(killed);
}

TEST_CASE("analysis of a partial sweep lists what is missing") {
  const auto dir = fresh_dir("partial");
  auto j = sweep_json();
  j["sizes"] = {8, 10, 12};
  j["points"] = 1;
  j["ln_ratio_min"] = 0.0;
  j["ln_ratio_max"] = 0.0;
  const auto spec = sweep_from_json(j);
  run_sweep(spec, dir, 1, false);
  const auto victim = expand(spec)[4].hash;
  fs::remove(dir / "records" / (victim + ".json"));
  const auto rows = analyze(dir);
  REQUIRE(rows.size() == 1);
  CHECK(std::find(rows[0].flags.begin(), rows[0].flags.end(), "missing_records") != rows[0].flags.end());
  const auto summary = records::read_json(dir / "summary.json");
  CHECK(summary["missing_records"].size() == 1);
  fs::remove_all(dir);
}

}
