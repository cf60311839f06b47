#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mcjc/linalg.hpp"
#include "mcjc/model.hpp"

namespace mcjc::ed {

/// Product states with total charge N, in lexicographic order of local
/// charges (site 0 most significant).
class SectorBasis {
 public:
  SectorBasis(const model::ModelParams& p, int N, std::size_t cap = model::kDefaultDimensionCap);

  const model::ModelParams& params() const { return params_; }
  int charge() const { return N_; }
  std::size_t dim() const { return states_.size(); }
  std::uint64_t state(std::size_t i) const { return states_[i]; }
  const std::vector<std::uint64_t>& states() const { return states_; }
  /// Index of a product-state code, or -1 when it is not in the sector.
  std::int64_t index_of(std::uint64_t code) const;
  const model::ProductSpace& space() const { return space_; }

 private:
  model::ModelParams params_;
  int N_;
  model::ProductSpace space_;
  std::vector<std::uint64_t> states_;
};

struct EdOptions {
  double tol = 1e-10;
  double eig_change_tol = 1e-12;
  int max_iter = 500;
  int max_krylov = 100;
  double degeneracy_tol = 1e-10;
  std::size_t cap = model::kDefaultDimensionCap;
  /// Below this dimension H is materialized once; above it, terms are applied
  /// on the fly for every product.
  std::size_t dense_threshold = 2000;
};

struct EdResult {
  double energy = 0.0;
  linalg::Vector vector;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  double second_energy = 0.0;  // lowest eigenvalue orthogonal to `vector`
};

/// Sector Hamiltonian as a matrix-vector product.
linalg::MatVec sector_matvec(const SectorBasis& basis);

/// Lanczos ground state of sector N from the fixed seeded start vector.
/// Throws Error(convergence) when the solver does not converge and
/// Error(dimension) for an empty or oversized sector.
EdResult ground_state(const model::ModelParams& p, int N, const EdOptions& opts = {});

/// Same, on an already-built basis.
EdResult ground_state(const SectorBasis& basis, const EdOptions& opts = {});

/// <v| O_a(site_a) O_b(site_b) |v> for local operators whose total charge
/// shift is zero (site_a == site_b multiplies them, O_b applied first).
double two_point(const SectorBasis& basis, const linalg::Vector& v, int site_a, const model::LocalOp& op_a,
                 int site_b, const model::LocalOp& op_b);
double one_point(const SectorBasis& basis, const linalg::Vector& v, int site, const model::LocalOp& op);

/// Von Neumann entropy of the first `cut` chain sites.
double entanglement_entropy(const SectorBasis& basis, const linalg::Vector& v, int cut);

struct PerturbativeHalfFilling {
  double first_order_energy;  // -sqrt(2) g_l
  /// Amplitudes in the order |1010>, |0101>, |1100>, |0110>, |0011>, |1001>.
  std::array<double, 6> amplitudes;
  linalg::Vector prediction;   // the same vector on the product basis of sector N = 2
  double overlap = 0.0;        // |<prediction|ED ground>|^2
  EdResult exact;
};

/// Degenerate first-order perturbation theory in g_l at L = 4, N = 2 for the
/// periodic chain: each cell is |0,down> ("0") or |1,-> ("1").
/// Requires g_l / g_r <= 0.05.
PerturbativeHalfFilling perturbative_half_filling(const model::ModelParams& p, const EdOptions& opts = {});

/// The 6x6 first-order matrix of H_l on the degenerate manifold, in the
/// order above, computed from the Hamiltonian's matrix elements.
linalg::Matrix degenerate_hopping_matrix(const model::ModelParams& p);

}  // namespace mcjc::ed
