#include "mcjc/jc_cell.hpp"

#include <cmath>

#include "mcjc/error.hpp"

namespace mcjc::jc {

double mixing_angle(int n, double g_r, double delta) {
  require(n >= 1, "mixing_angle: n must be at least 1");
  require(g_r >= 0, "mixing_angle: g_r must be nonnegative");
  require(g_r > 0 || delta != 0.0, "mixing_angle: degenerate doublet at g_r = 0 and zero detuning");
  const double sq = std::sqrt(static_cast<double>(n));
  if (g_r == 0.0) return delta > 0 ? 0.0 : 0.5 * M_PI;
  return std::atan((std::sqrt(4.0 * n * g_r * g_r + delta * delta) - delta) / (2.0 * sq * g_r));
}

JcDoublet jc_eigensystem(int n, const model::ModelParams& p) {
  const double delta = p.detuning();
  JcDoublet d;
  d.n = n;
  d.theta = mixing_angle(n, p.g_r, delta);
  const double half_split = 0.5 * std::sqrt(4.0 * n * p.g_r * p.g_r + delta * delta);
  d.e_plus = (n - 0.5) * p.omega_c + half_split;
  d.e_minus = (n - 0.5) * p.omega_c - half_split;
  const double s = std::sin(d.theta), c = std::cos(d.theta);
  d.gamma_plus = s;
  d.rho_minus = -s;
  d.gamma_minus = c;
  d.rho_plus = c;
  return d;
}

double ground_energy(const model::ModelParams& p) { return -0.5 * p.omega_z; }

ExcitationGaps excitation_gaps(const model::ModelParams& p) {
  const double e0 = ground_energy(p);
  const double e1 = jc_eigensystem(1, p).e_minus;
  const double e2 = jc_eigensystem(2, p).e_minus;
  return {e1 - e0, e2 - e1, (e2 - e1) - (e1 - e0)};
}

namespace {

struct Level {
  std::array<double, 2> gamma{0.0, 0.0};  // indexed by Branch
  std::array<double, 2> rho{0.0, 0.0};
};

Level level(int n, const model::ModelParams& p) {
  Level l;
  if (n == 0) {
    l.gamma[minus] = 1.0;
    return l;
  }
  const JcDoublet d = jc_eigensystem(n, p);
  l.gamma = {d.gamma_plus, d.gamma_minus};
  l.rho = {d.rho_plus, d.rho_minus};
  return l;
}

}  // namespace

PolaritonCoeffs polariton_coeffs(const model::ModelParams& p, int n_max) {
  require(n_max >= 1, "polariton_coeffs: n_max must be at least 1");
  PolaritonCoeffs out;
  out.n_max = n_max;
  out.t.assign(n_max + 1, {});
  out.k.assign(n_max + 1, {});
  for (int n = 1; n <= n_max; ++n) {
    const Level hi = level(n, p), lo = level(n - 1, p);
    const double sn = std::sqrt(static_cast<double>(n)), sn1 = std::sqrt(static_cast<double>(n - 1));
    for (int a : {plus, minus}) {
      for (int ap : {plus, minus}) {
        out.t[n][a][ap] = sn * hi.gamma[a] * lo.gamma[ap] + sn1 * hi.rho[a] * lo.rho[ap];
        out.k[n][a][ap] = hi.rho[a] * lo.gamma[ap];
      }
    }
  }
  return out;
}

linalg::Matrix cell_hamiltonian(const model::ModelParams& p) {
  const int dim = 2 * (p.n_max + 1);
  linalg::Matrix h = linalg::Matrix::Zero(dim, dim);
  for (int n = 0; n <= p.n_max; ++n) {
    for (int s = 0; s < 2; ++s) h(2 * n + s, 2 * n + s) = p.omega_c * n + 0.5 * p.omega_z * (s == 0 ? -1.0 : 1.0);
    // g_r (sigma+ a + a^dag sigma-) couples |n, down> and |n-1, up>
    if (n >= 1) {
      const double v = p.g_r * std::sqrt(static_cast<double>(n));
      h(2 * n, 2 * (n - 1) + 1) = v;
      h(2 * (n - 1) + 1, 2 * n) = v;
    }
  }
  return h;
}

linalg::Matrix polariton_basis(const model::ModelParams& p) {
  const int dim = 2 * (p.n_max + 1);
  linalg::Matrix u = linalg::Matrix::Zero(dim, 2 * p.n_max + 1);
  u(0, 0) = 1.0;
  for (int n = 1; n <= p.n_max; ++n) {
    const JcDoublet d = jc_eigensystem(n, p);
    const int col_plus = 2 * n - 1, col_minus = 2 * n;
    u(2 * n, col_plus) = d.gamma_plus;
    u(2 * (n - 1) + 1, col_plus) = d.rho_plus;
    u(2 * n, col_minus) = d.gamma_minus;
    u(2 * (n - 1) + 1, col_minus) = d.rho_minus;
  }
  return u;
}

}  // namespace mcjc::jc
