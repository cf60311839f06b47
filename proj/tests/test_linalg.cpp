#include <cmath>
#include <random>

#include <doctest.h>

#include "mcjc/error.hpp"
#include "mcjc/linalg.hpp"
#include "oracles.hpp"

using namespace mcjc;
using linalg::Matrix;
using linalg::Vector;

namespace {

Matrix random_symmetric(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
  return a;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("sym_eig agrees with Jacobi") {
  for (int n : {1, 2, 7, 30}) {
    const Matrix a = random_symmetric(n, 10 + n);
    const auto e = linalg::sym_eig(a);
    const auto ref = oracle::jacobi(a);
    for (int k = 0; k < n; ++k) CHECK(e.values[k] == doctest::Approx(ref.values[k]).epsilon(1e-12));
    const Matrix back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((back - a).norm() < 1e-12);
  }
}

TEST_CASE("sym_eig fixes the sign of every eigenvector") {
  const auto e = linalg::sym_eig(random_symmetric(12, 3));
  for (int k = 0; k < 12; ++k) {
    int i = 0;
    while (std::abs(e.vectors(i, k)) <= 1e-12) ++i;
    CHECK(e.vectors(i, k) > 0);
  }
}

TEST_CASE("svd reconstructs rectangular matrices") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto [r, c] : {std::pair{5, 3}, std::pair{3, 8}, std::pair{6, 6}}) {
    Matrix a(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) a(i, j) = u(rng);
    const auto s = linalg::svd(a);
    CHECK((s.u * s.s.asDiagonal() * s.v.transpose() - a).norm() < 1e-12);
    for (int k = 1; k < s.s.size(); ++k) CHECK(s.s[k] <= s.s[k - 1]);
    const auto ref = oracle::jacobi(a.transpose() * a);
    for (int k = 0; k < s.s.size(); ++k)
      CHECK(s.s[k] * s.s[k] == doctest::Approx(ref.values[c - 1 - k]).epsilon(1e-10));
  }
}

TEST_CASE("lanczos finds the lowest eigenpair") {
  const int n = 60;
  const Matrix a = random_symmetric(n, 99);
  linalg::MatVec op = [&](std::span<const double> x, std::span<double> y) {
    Eigen::Map<const Vector> xv(x.data(), n);
    Eigen::Map<Vector> yv(y.data(), n);
    yv = a * xv;
  };
  const auto r = linalg::lanczos_lowest(op, n, linalg::seeded_vector(n, 1));
  const auto ref = oracle::jacobi(a);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(ref.values[0]).epsilon(1e-10));
  CHECK((a * r.vector - r.value * r.vector).norm() < 1e-8);

  SUBCASE("deflation gives the second eigenvalue") {
    const auto r2 = linalg::lanczos_lowest(op, n, linalg::seeded_vector(n, 2), {}, {r.vector});
    CHECK(r2.value == doctest::Approx(ref.values[1]).epsilon(1e-9));
  }
}

TEST_CASE("lanczos restarts with a short Krylov space") {
  const int n = 80;
  const Matrix a = random_symmetric(n, 5);
  linalg::MatVec op = [&](std::span<const double> x, std::span<double> y) {
    Vector::Map(y.data(), n) = a * Vector::Map(x.data(), n);
  };
  linalg::LanczosOptions o;
  o.max_krylov = 8;
  o.max_iter = 4000;
  const auto r = linalg::lanczos_lowest(op, n, linalg::seeded_vector(n, 3), o);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(oracle::jacobi(a).values[0]).epsilon(1e-9));
}

TEST_CASE("least squares recovers a line") {
  Matrix x(5, 2);
  Vector y(5);
  for (int i = 0; i < 5; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = i;
    y[i] = 2.0 - 0.5 * i;
  }
  const auto f = linalg::least_squares(x, y);
  CHECK(f.coeffs[0] == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(f.coeffs[1] == doctest::Approx(-0.5).epsilon(1e-13));
  CHECK(f.rms_residual < 1e-13);
  CHECK(f.r_squared == doctest::Approx(1.0));
}

TEST_CASE("seeded_vector is deterministic and normalized") {
  const auto a = linalg::seeded_vector(100, 42);
  const auto b = linalg::seeded_vector(100, 42);
  const auto c = linalg::seeded_vector(100, 43);
  CHECK((a - b).norm() == 0.0);
  CHECK((a - c).norm() > 0.1);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

}
