#include <cmath>

#include <doctest.h>

#include "mcjc/error.hpp"
#include "mcjc/exact_diag.hpp"
#include "mcjc/jc_cell.hpp"
#include "oracles.hpp"

using namespace mcjc;
using model::Boundary;
using model::ModelParams;

namespace {

ModelParams params(int L, int n_max, double g_l, double g_r, Boundary b = Boundary::open, double delta = 0.0) {
  ModelParams p;
  p.L = L;
  p.n_max = n_max;
  p.g_l = g_l;
  p.g_r = g_r;
  p.omega_z = 1.0 + delta;
  p.boundary = b;
  return p;
}

}  // namespace

TEST_SUITE("exact_diag") {

TEST_CASE("sector basis") {
  const auto p = params(3, 2, 0.01, 0.01);
  ed::SectorBasis b(p, 3);
  const auto q = oracle::product_charges(p);
  CHECK(static_cast<long>(b.dim()) == std::count(q.begin(), q.end(), 3));
  for (std::size_t i = 0; i < b.dim(); ++i) CHECK(b.index_of(b.state(i)) == static_cast<std::int64_t>(i));
  CHECK(b.index_of(0) == -1);
  CHECK_THROWS_AS(ed::SectorBasis(p, 3, 10), Error);
  CHECK_THROWS_AS(ed::ground_state(p, 100), Error);
}

TEST_CASE("decoupled cells at unity filling") {
  for (int L : {2, 3, 4, 5})
    for (auto b : {Boundary::open, Boundary::periodic}) {
      const auto p = params(L, 2, 0.0, 0.02, b, 0.03);
      const auto r = ed::ground_state(p, L);
      CHECK(r.energy == doctest::Approx(L * jc::jc_eigensystem(1, p).e_minus).epsilon(1e-12));
    }
}

TEST_CASE("vacuum") {
  const auto r = ed::ground_state(params(2, 1, 0.01, 0.02), 0);
  CHECK(r.energy == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("golden value from dense diagonalization") {
  const auto p = params(4, 2, 0.015, 0.015);
  const double dense = oracle::sector_ground_energy(p, 4);
  const auto r = ed::ground_state(p, 4);
  CHECK(r.converged);
  CHECK(r.residual <= 1e-10);
  CHECK(r.energy == doctest::Approx(dense).epsilon(1e-12));
  CHECK(r.energy == doctest::Approx(1.9093132609121068).epsilon(1e-12));
}

TEST_CASE("sector minimality against the full spectrum") {
  for (auto b : {Boundary::open, Boundary::periodic}) {
    const auto p = params(3, 2, 0.012, 0.02, b, 0.01);
    const oracle::Mat h = oracle::kron_hamiltonian(p);
    const auto q = oracle::product_charges(p);
    const auto full = oracle::jacobi(h);
    for (int N = 0; N <= p.max_charge(); ++N) {
      // lowest full-spectrum eigenvalue whose eigenvector carries charge N
      double lowest = 1e300;
      for (int k = 0; k < full.values.size(); ++k) {
        double nbar = 0.0;
        for (int i = 0; i < h.rows(); ++i) nbar += q[i] * full.vectors(i, k) * full.vectors(i, k);
        if (std::abs(nbar - N) < 1e-6) {
          lowest = full.values[k];
          break;
        }
      }
      CHECK(ed::ground_state(p, N).energy == doctest::Approx(lowest).epsilon(1e-11));
    }
  }
}

TEST_CASE("matrix-free and dense paths agree") {
  const auto p = params(4, 3, 0.011, 0.019, Boundary::periodic);
  ed::EdOptions dense, sparse;
  dense.dense_threshold = 1u << 30;
  sparse.dense_threshold = 0;
  const auto a = ed::ground_state(p, 4, dense);
  const auto b = ed::ground_state(p, 4, sparse);
  CHECK(a.energy == doctest::Approx(b.energy).epsilon(1e-12));
  CHECK(std::abs(std::abs(a.vector.dot(b.vector)) - 1.0) < 1e-9);
}

TEST_CASE("deterministic") {
  const auto p = params(4, 2, 0.01, 0.02);
  const auto a = ed::ground_state(p, 3);
  const auto b = ed::ground_state(p, 3);
  CHECK(a.energy == b.energy);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("convexity in the charge") {
  for (auto b : {Boundary::open, Boundary::periodic}) {
    const auto p = params(4, 2, 0.009, 0.021, b);
    std::vector<double> e;
    for (int N = 0; N <= 8; ++N) e.push_back(ed::ground_state(p, N).energy);
    for (int N = 1; N < 8; ++N) CHECK(e[N + 1] + e[N - 1] - 2 * e[N] >= -1e-10);
  }
}

TEST_CASE("six-fold degeneracy of the decoupled half-filled ring") {
  const auto p = params(4, 2, 0.0, 0.0245, Boundary::periodic);
  const auto ev = oracle::jacobi(model::build_dense_hamiltonian(p, 2)).values;
  for (int k = 1; k < 6; ++k) CHECK(std::abs(ev[k] - ev[0]) < 1e-12);
  CHECK(ev[6] - ev[0] > 1e-3);
  const auto r = ed::ground_state(p, 2);
  CHECK(r.degenerate);
}

TEST_CASE("degenerate perturbation theory") {
  const auto p = params(4, 3, 0.0245e-3, 0.0245, Boundary::periodic);
  const auto m = ed::degenerate_hopping_matrix(p);
  CHECK((m - m.transpose()).norm() < 1e-15);
  const auto pt = ed::perturbative_half_filling(p);
  CHECK(pt.first_order_energy == doctest::Approx(-std::sqrt(2.0) * p.g_l).epsilon(1e-12));
  const double s = std::sqrt(2.0) / 4;
  const std::array<double, 6> want{0.5, 0.5, s, s, s, s};
  const double sign = pt.amplitudes[0] > 0 ? 1.0 : -1.0;
  for (int i = 0; i < 6; ++i) CHECK(sign * pt.amplitudes[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(pt.overlap >= 0.999);
  CHECK_THROWS_AS(ed::perturbative_half_filling(params(4, 3, 0.01, 0.0245, Boundary::periodic)), Error);
  CHECK_THROWS_AS(ed::perturbative_half_filling(params(5, 3, 1e-5, 0.0245, Boundary::periodic)), Error);
}

TEST_CASE("first-order error is quadratic") {
  auto p = params(4, 3, 0.0, 0.0245, Boundary::periodic);
  const double e0 = ed::ground_state(p, 2).energy;
  std::vector<double> ratio;
  for (double g : {4e-4, 2e-4, 1e-4, 5e-5}) {
    p.g_l = g;
    const double e = ed::ground_state(p, 2).energy;
    ratio.push_back(std::abs(e - e0 + std::sqrt(2.0) * g) / (g * g));
  }
  for (double r : ratio) CHECK(r < 1e3);
  CHECK(ratio.back() == doctest::Approx(ratio.front()).epsilon(0.1));
}

TEST_CASE("observables on the sector eigenvector") {
  const auto p = params(3, 2, 0.0, 0.02);
  ed::SectorBasis b(p, 3);
  const auto r = ed::ground_state(b);
  for (int i = 0; i < 3; ++i) {
    CHECK(ed::one_point(b, r.vector, 2 * i, model::qubit_number()) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ed::one_point(b, r.vector, 2 * i + 1, model::photon_number(2)) == doctest::Approx(0.5).epsilon(1e-12));
  }
  for (int cut = 2; cut < 6; cut += 2) CHECK(std::abs(ed::entanglement_entropy(b, r.vector, cut)) < 1e-12);
  CHECK(ed::entanglement_entropy(b, r.vector, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

}
