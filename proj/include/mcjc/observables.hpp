#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcjc/exact_diag.hpp"
#include "mcjc/model.hpp"
#include "mcjc/mps.hpp"

namespace mcjc::obs {

enum class Species { qubit, cavity };
std::string to_string(Species s);

struct DensityProfile {
  std::vector<double> n_q;  // <sigma+ sigma-> per cell
  std::vector<double> n_r;  // <a^dag a> per cell

  double total() const;
  /// Averages over cells lo..hi inclusive.
  double mean_q(int lo, int hi) const;
  double mean_r(int lo, int hi) const;
};

/// Cells used as correlation endpoints. For open chains a pair (i, i + r)
/// is used only when both cells lie in [lo, hi]; for periodic chains every
/// cell is a reference and the partner wraps.
struct Window {
  int lo = 0;
  int hi = 0;
  int r_max = 0;
  bool wrap = false;
};

/// Open: the central L/2 cells, separations up to L/4. Periodic: all cells,
/// separations up to L/4.
Window default_window(const model::ModelParams& p);

struct CorrelationTable {
  Window window;
  std::vector<double> gamma_q, gamma_r;  // <sigma+_i sigma-_{i+r}>, <a^dag_i a_{i+r}>
  std::vector<double> nn_q, nn_r;        // <n_i n_{i+r}>
  std::vector<int> pairs;                // number of (i, i + r) pairs averaged

  const std::vector<double>& gamma(Species s) const { return s == Species::qubit ? gamma_q : gamma_r; }
};

/// All functions below take a state whose sites right of the center are
/// right-canonical with the center at site 0 (what dmrg::run returns).
DensityProfile local_densities(const dmrg::Mps& mps, const model::ModelParams& p);

/// Throws invalid_argument when the window allows fewer than 4 separations.
CorrelationTable correlation_table(const dmrg::Mps& mps, const model::ModelParams& p, const Window& w);

std::vector<double> single_particle_density_matrix(const dmrg::Mps& mps, const model::ModelParams& p, Species s,
                                                   const Window& w);

/// S_pi = (1/N^2) sum_{i,j in window} (-1)^{|i-j|} <n_i n_j> for one
/// species, N the total polariton number of the state.
double structure_factor(const dmrg::Mps& mps, const model::ModelParams& p, Species s, const Window& w);

/// <O_x O'_y> for sites x < y.
double two_point(const dmrg::Mps& mps, int x, const model::LocalOp& op_x, int y, const model::LocalOp& op_y);

/// Same measurements from an exact sector eigenvector.
DensityProfile local_densities(const ed::SectorBasis& basis, const linalg::Vector& v);
CorrelationTable correlation_table(const ed::SectorBasis& basis, const linalg::Vector& v, const Window& w);
double structure_factor(const ed::SectorBasis& basis, const linalg::Vector& v, Species s, const Window& w);

/// CSV with header species,r,value,window_lo,window_hi; species labels are
/// gamma_q, gamma_r, nn_q, nn_r.
void write_correlation_csv(const std::filesystem::path& path, const CorrelationTable& t);
CorrelationTable read_correlation_csv(const std::filesystem::path& path);

}  // namespace mcjc::obs
