#include <cmath>
#include <numbers>

#include <doctest.h>

#include "mcjc/error.hpp"
#include "mcjc/jc_cell.hpp"
#include "oracles.hpp"

using namespace mcjc;
using model::ModelParams;

namespace {

ModelParams cell(double g_r, double delta, int n_max = 5) {
  ModelParams p;
  p.L = 2;
  p.g_r = g_r;
  p.g_l = 0.0;
  p.omega_z = 1.0 + delta;
  p.n_max = n_max;
  return p;
}

constexpr double kPi = std::numbers::pi;

// Cell operator in the product basis index 2n + s.
oracle::Mat cell_op(int n_max, bool photon) {
  const int d = 2 * (n_max + 1);
  oracle::Mat m = oracle::Mat::Zero(d, d);
  for (int n = 0; n <= n_max; ++n) {
    if (photon && n > 0)
      for (int s = 0; s < 2; ++s) m(2 * (n - 1) + s, 2 * n + s) = std::sqrt(static_cast<double>(n));
    if (!photon) m(2 * n, 2 * n + 1) = 1.0;
  }
  return m;
}

}  // namespace

TEST_SUITE("jc_cell") {

TEST_CASE("mixing angle") {
  CHECK(jc::mixing_angle(1, 0.015, 0.0) == doctest::Approx(kPi / 4).epsilon(1e-15));
  CHECK(jc::mixing_angle(1, 0.015, 10.0) < 0.01);
  // direct evaluation of the closed form; the 2x2 eigenvector cross-check is below
  CHECK(jc::mixing_angle(2, 0.0245, 0.01) == doctest::Approx(0.7137391027295331).epsilon(1e-12));
  CHECK(jc::mixing_angle(1, 0.02, 1e-13) == doctest::Approx(jc::mixing_angle(1, 0.02, -1e-13)).epsilon(1e-10));
  CHECK_THROWS_AS(jc::mixing_angle(1, 0.0, 0.0), Error);
  CHECK_THROWS_AS(jc::mixing_angle(0, 0.01, 0.0), Error);
  CHECK_THROWS_AS(jc::mixing_angle(1, -0.01, 0.0), Error);
}

TEST_CASE("resonant closed forms") {
  const auto p = cell(0.015, 0.0);
  auto d1 = jc::jc_eigensystem(1, p);
  CHECK(d1.e_plus == doctest::Approx(0.515).epsilon(1e-14));
  CHECK(d1.e_minus == doctest::Approx(0.485).epsilon(1e-14));
  auto d2 = jc::jc_eigensystem(2, p);
  CHECK(std::abs(d2.e_plus - (1.5 + std::sqrt(2.0) * 0.015)) < 1e-14);
  CHECK(std::abs(d2.e_minus - (1.5 - std::sqrt(2.0) * 0.015)) < 1e-14);
  for (const auto& d : {d1, d2}) {
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(d.gamma_plus) - r) < 1e-15);
    CHECK(std::abs(std::abs(d.gamma_minus) - r) < 1e-15);
    CHECK(std::abs(std::abs(d.rho_plus) - r) < 1e-15);
    CHECK(std::abs(std::abs(d.rho_minus) - r) < 1e-15);
  }
  CHECK(jc::ground_energy(p) == -0.5);
}

TEST_CASE("doublet invariants on a grid") {
  for (double g : {0.001, 0.015, 0.0245, 0.2})
    for (double delta : {-0.3, -0.01, 0.0, 0.02, 0.5})
      for (int n = 1; n <= 5; ++n) {
        const auto p = cell(g, delta);
        const auto d = jc::jc_eigensystem(n, p);
        const double th = jc::mixing_angle(n, g, delta);
        CHECK(d.gamma_plus == doctest::Approx(std::sin(th)).epsilon(1e-15));
        CHECK(d.rho_minus == doctest::Approx(-std::sin(th)).epsilon(1e-15));
        CHECK(d.gamma_minus == doctest::Approx(std::cos(th)).epsilon(1e-15));
        CHECK(d.rho_plus == doctest::Approx(std::cos(th)).epsilon(1e-15));
        CHECK(std::abs(d.gamma_plus * d.gamma_minus + d.rho_plus * d.rho_minus) < 1e-15);
        CHECK(d.e_plus > d.e_minus);
        CHECK(std::abs(d.e_plus + d.e_minus - (2 * n - 1)) < 1e-13);
        const double half = 0.5 * std::sqrt(4 * n * g * g + delta * delta);
        CHECK(std::abs(d.e_plus - (n - 0.5 + half)) < 1e-12);
        CHECK(std::abs(d.e_minus - (n - 0.5 - half)) < 1e-12);
        // eigenvector of the 2x2 block on {|n,down>, |n-1,up>}
        oracle::Mat h(2, 2);
        h << n * 1.0 - 0.5 * p.omega_z, std::sqrt(n) * g, std::sqrt(n) * g, (n - 1) * 1.0 + 0.5 * p.omega_z;
        oracle::Vec vp(2), vm(2);
        vp << d.gamma_plus, d.rho_plus;
        vm << d.gamma_minus, d.rho_minus;
        CHECK((h * vp - d.e_plus * vp).norm() < 1e-13);
        CHECK((h * vm - d.e_minus * vm).norm() < 1e-13);
      }
}

TEST_CASE("excitation gaps") {
  const auto g = jc::excitation_gaps(cell(0.015, 0.0));
  CHECK(g.first == doctest::Approx(0.985).epsilon(1e-14));
  CHECK(g.second == doctest::Approx(1 - (std::sqrt(2.0) - 1) * 0.015).epsilon(1e-14));
  CHECK(g.u_eff == doctest::Approx((2 - std::sqrt(2.0)) * 0.015).epsilon(1e-12));
}

TEST_CASE("cell Hamiltonian and polariton basis") {
  const auto p = cell(0.0245, 0.03, 3);
  const oracle::Mat h = jc::cell_hamiltonian(p);
  const oracle::Mat u = jc::polariton_basis(p);
  CHECK(u.cols() == 7);
  CHECK((u.transpose() * u - oracle::Mat::Identity(7, 7)).norm() < 1e-14);
  const oracle::Mat d = u.transpose() * h * u;
  CHECK(d(0, 0) == doctest::Approx(jc::ground_energy(p)));
  for (int n = 1; n <= 3; ++n) {
    const auto e = jc::jc_eigensystem(n, p);
    CHECK(d(2 * n - 1, 2 * n - 1) == doctest::Approx(e.e_plus).epsilon(1e-13));
    CHECK(d(2 * n, 2 * n) == doctest::Approx(e.e_minus).epsilon(1e-13));
  }
  CHECK((d - oracle::Mat(d.diagonal().asDiagonal())).norm() < 1e-13);
}

TEST_CASE("coefficient tables reproduce the basis change") {
  for (int n_max : {1, 2, 3, 4, 5})
    for (double g : {0.0245, 0.01})
      for (double delta : {0.0, 0.04, -0.07}) {
        const auto p = cell(g, delta, n_max);
        const oracle::Mat u = jc::polariton_basis(p);
        const auto c = jc::polariton_coeffs(p, n_max);
        const oracle::Mat a_pol = u.transpose() * cell_op(n_max, true) * u;
        const oracle::Mat s_pol = u.transpose() * cell_op(n_max, false) * u;
        // column of |n, alpha>: n = 0 -> 0, else 2n - 1 (+) or 2n (-)
        auto col = [](int n, int alpha) { return n == 0 ? 0 : 2 * n - 1 + alpha; };
        oracle::Mat a_rec = oracle::Mat::Zero(u.cols(), u.cols());
        oracle::Mat s_rec = a_rec;
        for (int n = 1; n <= n_max; ++n)
          for (int al = 0; al < 2; ++al)
            for (int be = 0; be < 2; ++be) {
              if (n - 1 == 0 && be == jc::plus) continue;
              a_rec(col(n - 1, be), col(n, al)) += c.t[n][al][be];
              s_rec(col(n - 1, be), col(n, al)) += c.k[n][al][be];
            }
        CHECK((a_rec - a_pol).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((s_rec - s_pol).cwiseAbs().maxCoeff() < 1e-12);
      }
}

TEST_CASE("ground-state transition coefficient at resonance") {
  const auto c = jc::polariton_coeffs(cell(0.02, 0.0, 2), 2);
  CHECK(std::abs(std::abs(c.k[1][jc::minus][jc::minus]) - 1 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(std::abs(c.k[1][jc::plus][jc::minus]) - 1 / std::sqrt(2.0)) < 1e-15);
}

}
