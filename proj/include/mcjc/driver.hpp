#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcjc/analysis.hpp"
#include "mcjc/dmrg.hpp"
#include "mcjc/model.hpp"

namespace mcjc::driver {

namespace fs = std::filesystem;

enum class Solver { ed, dmrg };

struct Measurements {
  bool densities = true;
  bool correlations = true;  // correlation table, written as CSV
  bool structure_factor = true;
  bool fits = true;  // exponential and power-law fits of the table
  int r_min = 2;
  int r_max = -1;  // -1: L / 4
};

/// One (params, N) solve. N = filling * L + charge_offset.
struct JobSpec {
  model::ModelParams params;
  int filling_num = 1;
  int filling_den = 1;
  int charge_offset = 0;
  Solver solver = Solver::dmrg;
  dmrg::SweepConfig sweep;  // target_charge is overwritten with N
  Measurements measure;
  std::size_t ed_cap = model::kDefaultDimensionCap;

  int N() const;
  /// Throws Error(config) when filling * L is not an integer or N is out of
  /// range, and Error(dimension) when an ED sector exceeds the cap.
  void validate() const;
};

nlohmann::json to_json(const JobSpec& s);
/// Strict: unknown keys are rejected. "filling" is a string "p/q" or a number.
JobSpec job_from_json(const nlohmann::json& j);
/// Hash of the spec without machine-local fields (scratch directory).
std::string job_hash(const JobSpec& s);

/// Record path for a spec: <out>/records/<hash>.json.
fs::path record_path(const fs::path& out_dir, const JobSpec& s);

/// Runs solver, measurements and fits and writes the record plus its CSV
/// sidecars atomically. Solver failures are recorded (converged = false,
/// "error"); I/O and config errors throw. With `resume`, an existing record
/// with a matching hash is returned without recomputation.
nlohmann::json run_job(const JobSpec& spec, const fs::path& out_dir, bool resume = false);

/// Exact-diagonalization record {params, N, energy, residual, iterations}.
nlohmann::json ed_record(const model::ModelParams& p, int N, std::size_t cap = model::kDefaultDimensionCap);

/// Phase-diagram sweep: a fixed-sum coupling grid (or explicit ln ratios)
/// times a list of sizes; with chemical potentials every point also runs
/// N - 1 and N + 1.
struct SweepSpec {
  JobSpec base;
  std::vector<int> sizes;
  double coupling_sum = 0.03;
  double ln_ratio_min = -1.6;
  double ln_ratio_max = 1.6;
  int points = 11;
  std::vector<double> ln_ratios;  // overrides the even grid when nonempty
  bool chemical_potentials = true;
};

nlohmann::json to_json(const SweepSpec& s);
SweepSpec sweep_from_json(const nlohmann::json& j);

struct SweepJob {
  int point = 0;
  double ln_ratio = 0.0;
  int L = 0;
  int offset = 0;
  JobSpec spec;
  std::string hash;
};

std::vector<SweepJob> expand(const SweepSpec& s);

struct SummaryRow {
  double ln_ratio = 0.0;
  double mu_p = 0.0, mu_h = 0.0, gap = 0.0;
  double xi_q = 0.0, xi_r = 0.0, y_q = 0.0, y_r = 0.0;
  double K0_q = 0.0, K0_r = 0.0;
  std::vector<std::string> flags;
};

struct SweepOutcome {
  int total = 0;
  int ran = 0;
  int skipped = 0;
  int failed = 0;  // thrown errors plus non-converged solves
  std::vector<std::string> failures;
  std::vector<SummaryRow> summary;
};

/// Runs every job with at most `jobs` workers, writes the manifest, then
/// aggregates (see analyze). Resume skips jobs with a matching record.
SweepOutcome run_sweep(const SweepSpec& s, const fs::path& out_dir, int jobs, bool resume);

/// Rebuilds the summary from <out>/sweep_manifest.json and existing records,
/// re-running the fits on the stored correlation tables. Writes
/// summary.csv, summary.json and plots/*.csv.
std::vector<SummaryRow> analyze(const fs::path& out_dir);

}  // namespace mcjc::driver
