#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <json.hpp>

#include "mcjc/model.hpp"
#include "mcjc/mps.hpp"

namespace mcjc::dmrg {

struct SweepConfig {
  std::vector<int> d_schedule{100, 200, 400, 600, 600};  // bond dimension per sweep, last entry repeats
  int max_sweeps = 12;
  double energy_tol = 1e-10;  // relative change between consecutive full sweeps
  double lanczos_tol = 1e-8;
  int lanczos_max_iter = 200;
  int lanczos_krylov = 40;
  int target_charge = 0;
  /// Amplitude of the deterministic perturbation mixed into the two-site
  /// wavefunction before truncation, per sweep; sweeps past the end use 0.
  std::vector<double> noise{1e-3, 1e-4, 1e-5};
  std::uint64_t seed = 12345;
  std::size_t memory_budget_bytes = 0;  // 0 keeps every environment resident
  std::filesystem::path scratch_dir;    // empty: default_scratch_root()

  /// Throws Error(invalid_argument) for a decreasing schedule, D < 1 or a
  /// nonpositive tolerance.
  void validate() const;
};

nlohmann::json to_json(const SweepConfig& c);
/// Strict parser, unknown keys are rejected.
SweepConfig sweep_config_from_json(const nlohmann::json& j);

struct SweepStats {
  int bond_dim = 0;
  double energy = 0.0;
  double max_truncation = 0.0;  // largest discarded weight at any cut
  int max_kept = 0;
  double seconds = 0.0;
};

struct GroundStateResult {
  double energy = 0.0;
  std::vector<double> truncation_error_per_sweep;
  std::vector<SweepStats> sweeps;
  /// entropy_profile[k] is the entropy of the first k + 1 sites, k in [0, 2L - 2].
  std::vector<double> entropy_profile;
  int n_sweeps_used = 0;
  bool converged = false;
  int spills = 0;
  std::shared_ptr<const Mps> state;
};

/// Finite-lattice two-site DMRG in the charge sector config.target_charge.
/// Throws Error(dimension) when the sector is empty; non-convergence is
/// reported through `converged`.
GroundStateResult run(const model::ModelParams& params, const SweepConfig& config);

/// Entropy of the first `cut` sites (1 <= cut < 2L).
double entanglement_entropy(const GroundStateResult& result, int cut);

/// <psi|H|psi> / <psi|psi> evaluated by full contraction.
double energy_expectation(const Mps& mps, const model::ModelParams& params);

}  // namespace mcjc::dmrg
