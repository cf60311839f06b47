#pragma once

#include <array>
#include <vector>

#include "mcjc/model.hpp"

namespace mcjc::jc {

/// The n-excitation doublet |n,+>, |n,-> of one Jaynes-Cummings cell,
/// |n,a> = gamma_a |n,down> + rho_a |n-1,up>.
struct JcDoublet {
  int n = 1;
  double theta = 0.0;
  double e_plus = 0.0;
  double e_minus = 0.0;
  double gamma_plus = 0.0, gamma_minus = 0.0;
  double rho_plus = 0.0, rho_minus = 0.0;
};

/// theta_n in (0, pi/2). Rejects n < 1, negative g_r, and the g_r = 0,
/// delta = 0 point where the doublet is degenerate.
double mixing_angle(int n, double g_r, double delta);

JcDoublet jc_eigensystem(int n, const model::ModelParams& p);

/// E_0 = -omega_z / 2 for |0,down>.
double ground_energy(const model::ModelParams& p);

struct ExcitationGaps {
  double first;   // E_{1,-} - E_0
  double second;  // E_{2,-} - E_{1,-}
  double u_eff;   // second - first
};

ExcitationGaps excitation_gaps(const model::ModelParams& p);

enum Branch { plus = 0, minus = 1 };

/// Coefficient tables of the cavity and qubit lowering operators in the
/// polariton basis: a = sum t[n][a][a'] |n-1,a'><n,a|, likewise sigma- with k.
/// Level 0 is the singlet |0,down>, stored as branch `minus` with
/// (gamma, rho) = (1, 0); its `plus` slot does not exist and holds zero.
struct PolaritonCoeffs {
  int n_max = 0;
  std::vector<std::array<std::array<double, 2>, 2>> t;  // index n = 0..n_max, t[0] unused
  std::vector<std::array<std::array<double, 2>, 2>> k;
};

PolaritonCoeffs polariton_coeffs(const model::ModelParams& p, int n_max);

/// Dense cell Hamiltonian in the product basis |n, s> ordered as
/// index = 2 * n + s (s = 0 down, 1 up), photon cutoff n_max.
linalg::Matrix cell_hamiltonian(const model::ModelParams& p);

/// Columns are the cell eigenstates ordered |0,->, |1,+>, |1,->, |2,+>, ...
/// up to level n_max, in the cell product basis above. The leftover state
/// |n_max, up> is not included.
linalg::Matrix polariton_basis(const model::ModelParams& p);

}  // namespace mcjc::jc
