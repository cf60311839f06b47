#include "mcjc/exact_diag.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "mcjc/error.hpp"
#include "mcjc/jc_cell.hpp"

namespace mcjc::ed {

using linalg::Matrix;
using linalg::Vector;

SectorBasis::SectorBasis(const model::ModelParams& p, int N, std::size_t cap)
    : params_(p), N_(N), space_(p), states_(space_.enumerate(N, cap)) {
  require(!states_.empty(), "SectorBasis: empty sector", ErrorCode::dimension);
}

std::int64_t SectorBasis::index_of(std::uint64_t code) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), code);
  if (it == states_.end() || *it != code) return -1;
  return it - states_.begin();
}

linalg::MatVec sector_matvec(const SectorBasis& basis) {
  auto action = std::make_shared<model::HamiltonianAction>(basis.params());
  return [&basis, action](std::span<const double> x, std::span<double> y) {
    for (std::size_t col = 0; col < basis.dim(); ++col) y[col] = 0.0;
    for (std::size_t col = 0; col < basis.dim(); ++col) {
      const double xc = x[col];
      if (xc == 0.0) continue;
      action->apply(basis.state(col), [&](std::uint64_t code, double amp) {
        const auto row = basis.index_of(code);
        y[static_cast<std::size_t>(row)] += amp * xc;
      });
    }
  };
}

EdResult ground_state(const model::ModelParams& p, int N, const EdOptions& opts) {
  const SectorBasis basis(p, N, opts.cap);
  return ground_state(basis, opts);
}

EdResult ground_state(const SectorBasis& basis, const EdOptions& opts) {
  const std::size_t dim = basis.dim();
  linalg::MatVec op;
  std::shared_ptr<Matrix> dense;
  if (dim <= opts.dense_threshold) {
    dense = std::make_shared<Matrix>(model::build_dense_hamiltonian(basis.params(), basis.charge(), opts.cap));
    op = [dense](std::span<const double> x, std::span<double> y) {
      Eigen::Map<Vector>(y.data(), static_cast<Eigen::Index>(y.size())).noalias() =
          *dense * Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    };
  } else {
    op = sector_matvec(basis);
  }

  EdResult out;
  if (dim == 1) {
    Vector x = Vector::Ones(1), y(1);
    op(std::span<const double>(x.data(), 1), std::span<double>(y.data(), 1));
    out.energy = y[0];
    out.vector = x;
    out.converged = true;
    out.second_energy = std::numeric_limits<double>::infinity();
    return out;
  }

  linalg::LanczosOptions lo{opts.tol, opts.eig_change_tol, opts.max_iter, opts.max_krylov};
  auto lowest = linalg::lanczos_lowest(op, dim, linalg::seeded_vector(dim, 20170101), lo);
  if (!lowest.converged)
    fail(ErrorCode::convergence, "ed::ground_state: Lanczos did not converge (residual " +
                                     std::to_string(lowest.residual) + ")");
  out.energy = lowest.value;
  out.vector = lowest.vector;
  out.residual = lowest.residual;
  out.iterations = lowest.iterations;
  out.converged = true;

  auto second = linalg::lanczos_lowest(op, dim, linalg::seeded_vector(dim, 20170102), lo, {out.vector});
  out.iterations += second.iterations;
  out.second_energy = second.value;
  out.degenerate = std::abs(second.value - out.energy) <= opts.degeneracy_tol * std::max(1.0, std::abs(out.energy));
  return out;
}

double two_point(const SectorBasis& basis, const Vector& v, int site_a, const model::LocalOp& op_a, int site_b,
                 const model::LocalOp& op_b) {
  require(op_a.charge_shift + op_b.charge_shift == 0, "ed::two_point: operator product changes the charge");
  const auto map_a = op_a.column_map(), map_b = op_b.column_map();
  const auto& space = basis.space();
  double acc = 0.0;
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    if (v[i] == 0.0) continue;
    std::uint64_t code = basis.state(i);
    const int sb = space.local_state(code, site_b);
    const auto [ob, vb] = map_b[sb];
    if (ob < 0) continue;
    code = code + (static_cast<std::int64_t>(ob) - sb) * space.stride(site_b);
    const int sa = space.local_state(code, site_a);
    const auto [oa, va] = map_a[sa];
    if (oa < 0) continue;
    code = code + (static_cast<std::int64_t>(oa) - sa) * space.stride(site_a);
    const auto j = basis.index_of(code);
    if (j >= 0) acc += v[j] * va * vb * v[i];
  }
  return acc;
}

double one_point(const SectorBasis& basis, const Vector& v, int site, const model::LocalOp& op) {
  const int d = static_cast<int>(op.m.rows());
  return two_point(basis, v, site, op, site, model::identity_op(d));
}

double entanglement_entropy(const SectorBasis& basis, const Vector& v, int cut) {
  const auto& space = basis.space();
  require(cut >= 1 && cut < space.num_sites(), "ed::entanglement_entropy: invalid cut");
  const std::uint64_t split = space.stride(cut - 1);  // left part = code / split
  struct Block {
    std::map<std::uint64_t, int> rows, cols;
    std::vector<std::tuple<int, int, double>> entries;
  };
  std::map<int, Block> blocks;
  std::vector<int> local(space.num_sites());
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    space.decode(basis.state(i), local);
    int left_charge = 0;
    for (int s = 0; s < cut; ++s) left_charge += local[s];
    const std::uint64_t code = basis.state(i);
    const std::uint64_t left = code / split, right = code % split;
    auto& b = blocks[left_charge];
    const int r = b.rows.try_emplace(left, static_cast<int>(b.rows.size())).first->second;
    const int c = b.cols.try_emplace(right, static_cast<int>(b.cols.size())).first->second;
    b.entries.emplace_back(r, c, v[i]);
  }
  double s = 0.0;
  for (auto& [q, b] : blocks) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(b.rows.size()), static_cast<Eigen::Index>(b.cols.size()));
    for (auto [r, c, x] : b.entries) m(r, c) = x;
    const auto dec = linalg::svd(m);
    for (Eigen::Index k = 0; k < dec.s.size(); ++k) {
      const double w = dec.s[k] * dec.s[k];
      if (w > 1e-300) s -= w * std::log(w);
    }
  }
  return s;
}

namespace {

constexpr std::array<std::array<int, 4>, 6> kHalfFillingConfigs = {{
    {1, 0, 1, 0},
    {0, 1, 0, 1},
    {1, 1, 0, 0},
    {0, 1, 1, 0},
    {0, 0, 1, 1},
    {1, 0, 0, 1},
}};

// Product-basis vector with each cell in |0,down> or |1,->.
Vector cell_product_state(const SectorBasis& basis, const std::array<int, 4>& occ) {
  const auto& p = basis.params();
  const jc::JcDoublet d = jc::jc_eigensystem(1, p);
  // per cell: list of (qubit state, photons, amplitude)
  std::vector<std::vector<std::tuple<int, int, double>>> cells;
  for (int o : occ) {
    if (o == 0) cells.push_back({{0, 0, 1.0}});
    else cells.push_back({{0, 1, d.gamma_minus}, {1, 0, d.rho_minus}});
  }
  Vector out = Vector::Zero(static_cast<Eigen::Index>(basis.dim()));
  std::vector<int> local(8);
  for (const auto& c0 : cells[0])
    for (const auto& c1 : cells[1])
      for (const auto& c2 : cells[2])
        for (const auto& c3 : cells[3]) {
          double amp = 1.0;
          int s = 0;
          for (const auto* c : {&c0, &c1, &c2, &c3}) {
            local[s++] = std::get<0>(*c);
            local[s++] = std::get<1>(*c);
            amp *= std::get<2>(*c);
          }
          const auto idx = basis.index_of(basis.space().encode(local));
          require(idx >= 0, "perturbative_half_filling: state outside sector", ErrorCode::internal);
          out[idx] += amp;
        }
  return out;
}

void check_perturbative(const model::ModelParams& p) {
  require(p.L == 4, "perturbative_half_filling: requires L = 4");
  require(p.boundary == model::Boundary::periodic, "perturbative_half_filling: requires periodic boundary");
  require(p.g_r > 0 && p.g_l <= 0.05 * p.g_r,
          "perturbative_half_filling: outside the perturbative regime (need g_l / g_r <= 0.05)");
}

}  // namespace

Matrix degenerate_hopping_matrix(const model::ModelParams& p) {
  check_perturbative(p);
  const SectorBasis basis(p, 2);
  model::ModelParams bare = p;
  bare.g_l = 0.0;
  const Matrix h = model::build_dense_hamiltonian(p, 2) - model::build_dense_hamiltonian(bare, 2);
  std::vector<Vector> phi;
  for (const auto& occ : kHalfFillingConfigs) phi.push_back(cell_product_state(basis, occ));
  Matrix m(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) m(i, j) = phi[i].dot(h * phi[j]);
  return m;
}

PerturbativeHalfFilling perturbative_half_filling(const model::ModelParams& p, const EdOptions& opts) {
  check_perturbative(p);
  const SectorBasis basis(p, 2, opts.cap);
  PerturbativeHalfFilling out;
  const auto dec = linalg::sym_eig(degenerate_hopping_matrix(p));
  out.first_order_energy = dec.values[0];
  Vector prediction = Vector::Zero(static_cast<Eigen::Index>(basis.dim()));
  for (int i = 0; i < 6; ++i) {
    out.amplitudes[i] = dec.vectors(i, 0);
    prediction += out.amplitudes[i] * cell_product_state(basis, kHalfFillingConfigs[i]);
  }
  out.prediction = prediction;
  out.exact = ground_state(basis, opts);
  const double ov = prediction.dot(out.exact.vector);
  out.overlap = ov * ov;
  return out;
}

}  // namespace mcjc::ed
