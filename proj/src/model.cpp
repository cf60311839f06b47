#include "mcjc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcjc/error.hpp"

namespace mcjc::model {

void ModelParams::validate() const {
  require(L >= 2, "ModelParams: L must be at least 2 (got " + std::to_string(L) + ")");
  require(n_max >= 1, "ModelParams: n_max must be at least 1");
  require(omega_c > 0, "ModelParams: omega_c must be positive");
  require(g_l >= 0 && g_r >= 0, "ModelParams: couplings must be nonnegative");
  require(std::isfinite(omega_z) && std::isfinite(g_l) && std::isfinite(g_r), "ModelParams: non-finite value");
}

std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "open") return Boundary::open;
  if (s == "periodic") return Boundary::periodic;
  fail(ErrorCode::config, "unknown boundary '" + s + "' (expected open or periodic)");
}

nlohmann::json to_json(const ModelParams& p) {
  return {{"L", p.L},         {"omega_c", p.omega_c}, {"omega_z", p.omega_z},           {"g_l", p.g_l},
          {"g_r", p.g_r},     {"n_max", p.n_max},     {"boundary", to_string(p.boundary)}};
}

ModelParams params_from_json(const nlohmann::json& j) {
  require(j.is_object(), "ModelParams: expected a JSON object", ErrorCode::config);
  static const std::vector<std::string> known = {"L", "omega_c", "omega_z", "g_l", "g_r", "n_max", "boundary"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(ErrorCode::config, "ModelParams: unknown key '" + key + "'");
  }
  require(j.contains("L"), "ModelParams: missing required key 'L'", ErrorCode::config);
  ModelParams p;
  try {
    p.L = j.at("L").get<int>();
    if (j.contains("omega_c")) p.omega_c = j.at("omega_c").get<double>();
    if (j.contains("omega_z")) p.omega_z = j.at("omega_z").get<double>();
    if (j.contains("g_l")) p.g_l = j.at("g_l").get<double>();
    if (j.contains("g_r")) p.g_r = j.at("g_r").get<double>();
    if (j.contains("n_max")) p.n_max = j.at("n_max").get<int>();
    if (j.contains("boundary")) p.boundary = boundary_from_string(j.at("boundary").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("ModelParams: ") + e.what());
  }
  p.validate();
  return p;
}

SiteBasis site_basis(const ModelParams& p, int site) {
  require(site >= 0 && site < p.num_sites(), "site_basis: site out of range");
  SiteBasis b;
  if (site % 2 == 0) {
    b.kind = SiteKind::qubit;
    b.dim = 2;
  } else {
    b.kind = SiteKind::cavity;
    b.dim = p.n_max + 1;
  }
  b.charge.resize(b.dim);
  std::iota(b.charge.begin(), b.charge.end(), 0);
  return b;
}

std::vector<SiteBasis> chain_bases(const ModelParams& p) {
  std::vector<SiteBasis> out;
  for (int s = 0; s < p.num_sites(); ++s) out.push_back(site_basis(p, s));
  return out;
}

std::vector<std::pair<int, double>> LocalOp::column_map() const {
  std::vector<std::pair<int, double>> out(m.cols(), {-1, 0.0});
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (m(r, c) == 0.0) continue;
      require(out[c].first < 0, "LocalOp::column_map: operator '" + name + "' has two nonzeros in a column",
              ErrorCode::internal);
      out[c] = {static_cast<int>(r), m(r, c)};
    }
  }
  return out;
}

LocalOp LocalOp::adjoint() const {
  std::string n = name;
  if (n.ends_with("^dag")) n.resize(n.size() - 4);
  else n += "^dag";
  return {n, -charge_shift, m.transpose()};
}

LocalOp identity_op(int dim) { return {"I", 0, Matrix::Identity(dim, dim)}; }

LocalOp sigma_plus() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return {"sigma+", 1, m};
}

LocalOp sigma_minus() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return {"sigma-", -1, m};
}

LocalOp sigma_z() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = -1.0;
  m(1, 1) = 1.0;
  return {"sigma_z", 0, m};
}

LocalOp qubit_number() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = 1.0;
  return {"n_q", 0, m};
}

LocalOp annihilate(int n_max) {
  Matrix m = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return {"a", -1, m};
}

LocalOp create(int n_max) {
  LocalOp op = annihilate(n_max);
  return {"a^dag", 1, op.m.transpose()};
}

LocalOp photon_number(int n_max) {
  Matrix m = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 0; n <= n_max; ++n) m(n, n) = n;
  return {"n_r", 0, m};
}

LocalOp number_op(const SiteBasis& b) {
  return b.kind == SiteKind::qubit ? qubit_number() : photon_number(b.dim - 1);
}

std::vector<OperatorProduct> LocalTerms::products(const ModelParams& p) const {
  std::vector<OperatorProduct> out;
  for (const auto& h : hopping) {
    // sigma+_q a_c and a^dag_c sigma-_q, each written with the lower site first.
    const LocalOp sp = sigma_plus(), sm = sigma_minus(), a = annihilate(p.n_max), ad = create(p.n_max);
    if (h.qubit < h.cavity) {
      out.push_back({h.qubit, sp, h.cavity, a, h.coeff});
      out.push_back({h.qubit, sm, h.cavity, ad, h.coeff});
    } else {
      out.push_back({h.cavity, a, h.qubit, sp, h.coeff});
      out.push_back({h.cavity, ad, h.qubit, sm, h.coeff});
    }
  }
  return out;
}

LocalTerms build_local_terms(const ModelParams& p) {
  p.validate();
  LocalTerms t;
  for (int i = 0; i < p.L; ++i) {
    t.onsite.push_back({qubit_site(i), 0.5 * p.omega_z, sigma_z()});
    t.onsite.push_back({cavity_site(i), p.omega_c, photon_number(p.n_max)});
  }
  for (int i = 0; i < p.L; ++i) {
    t.hopping.push_back({qubit_site(i), cavity_site(i), p.g_r, false});
    if (i + 1 < p.L) t.hopping.push_back({qubit_site(i + 1), cavity_site(i), p.g_l, false});
  }
  if (p.boundary == Boundary::periodic) t.hopping.push_back({qubit_site(0), cavity_site(p.L - 1), p.g_l, true});
  return t;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Sector> sectors_of(std::span<const int> charges) {
  std::map<int, int> counts;
  for (int c : charges) ++counts[c];
  std::vector<Sector> out;
  for (auto [c, n] : counts) out.push_back({c, n});
  return out;
}

int sector_dim(const std::vector<Sector>& s, int charge) {
  for (const auto& x : s)
    if (x.charge == charge) return x.dim;
  return -1;
}

}  // namespace

BlockedOperator::BlockedOperator(std::vector<Sector> row_sectors, std::vector<Sector> col_sectors, int charge_shift)
    : rows_(std::move(row_sectors)), cols_(std::move(col_sectors)), charge_shift_(charge_shift) {
  auto by_charge = [](const Sector& a, const Sector& b) { return a.charge < b.charge; };
  std::sort(rows_.begin(), rows_.end(), by_charge);
  std::sort(cols_.begin(), cols_.end(), by_charge);
}

void BlockedOperator::set_block(int row_charge, int col_charge, Matrix block) {
  require(row_charge == col_charge + charge_shift_, "BlockedOperator: block violates the charge shift");
  const int r = sector_dim(rows_, row_charge), c = sector_dim(cols_, col_charge);
  require(r >= 0 && c >= 0, "BlockedOperator: unknown sector");
  require(block.rows() == r && block.cols() == c, "BlockedOperator: block shape does not match sectors");
  blocks_[{row_charge, col_charge}] = std::move(block);
}

const Matrix* BlockedOperator::block(int row_charge, int col_charge) const {
  auto it = blocks_.find({row_charge, col_charge});
  return it == blocks_.end() ? nullptr : &it->second;
}

BlockedOperator BlockedOperator::from_dense(const Matrix& m, std::span<const int> row_charges,
                                            std::span<const int> col_charges, int charge_shift) {
  require(m.rows() == static_cast<Eigen::Index>(row_charges.size()) &&
              m.cols() == static_cast<Eigen::Index>(col_charges.size()),
          "BlockedOperator::from_dense: charge lists do not match the matrix shape");
  BlockedOperator op(sectors_of(row_charges), sectors_of(col_charges), charge_shift);
  // Position of each basis state inside its sector.
  auto offsets = [](std::span<const int> charges) {
    std::map<int, int> next;
    std::vector<int> pos(charges.size());
    for (std::size_t i = 0; i < charges.size(); ++i) pos[i] = next[charges[i]]++;
    return pos;
  };
  const auto rpos = offsets(row_charges), cpos = offsets(col_charges);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) == 0.0) continue;
      const int rc = row_charges[r], cc = col_charges[c];
      require(rc == cc + charge_shift, "BlockedOperator::from_dense: element connects wrong sectors");
      auto& blk = op.blocks_[{rc, cc}];
      if (blk.size() == 0) blk = Matrix::Zero(sector_dim(op.rows_, rc), sector_dim(op.cols_, cc));
      blk(rpos[r], cpos[c]) = m(r, c);
    }
  }
  return op;
}

BlockedOperator BlockedOperator::from_local(const LocalOp& op, const SiteBasis& b) {
  return from_dense(op.m, b.charge, b.charge, op.charge_shift);
}

BlockedOperator BlockedOperator::adjoint() const {
  BlockedOperator out(cols_, rows_, -charge_shift_);
  for (const auto& [key, m] : blocks_) out.blocks_[{key.second, key.first}] = m.transpose();
  return out;
}

Matrix BlockedOperator::to_dense() const {
  auto offsets = [](const std::vector<Sector>& s) {
    std::map<int, int> off;
    int total = 0;
    for (const auto& x : s) {
      off[x.charge] = total;
      total += x.dim;
    }
    return std::pair{off, total};
  };
  const auto [roff, nr] = offsets(rows_);
  const auto [coff, nc] = offsets(cols_);
  Matrix out = Matrix::Zero(nr, nc);
  for (const auto& [key, m] : blocks_) out.block(roff.at(key.first), coff.at(key.second), m.rows(), m.cols()) = m;
  return out;
}

// ---------------------------------------------------------------------------

ProductSpace::ProductSpace(const ModelParams& p) {
  p.validate();
  for (int s = 0; s < p.num_sites(); ++s) dims_.push_back(site_basis(p, s).dim);
  stride_.assign(dims_.size(), 1);
  long double total = 1;
  for (int s = static_cast<int>(dims_.size()) - 1; s >= 0; --s) {
    stride_[s] = static_cast<std::uint64_t>(total);
    total *= dims_[s];
  }
  require(total < 1.8e19L, "ProductSpace: chain too long for 64-bit state codes", ErrorCode::dimension);
}

std::uint64_t ProductSpace::encode(std::span<const int> local) const {
  std::uint64_t code = 0;
  for (std::size_t s = 0; s < dims_.size(); ++s) code += static_cast<std::uint64_t>(local[s]) * stride_[s];
  return code;
}

void ProductSpace::decode(std::uint64_t code, std::span<int> local) const {
  for (std::size_t s = 0; s < dims_.size(); ++s) local[s] = static_cast<int>((code / stride_[s]) % dims_[s]);
}

std::uint64_t ProductSpace::full_dim() const { return stride_.empty() ? 1 : stride_[0] * dims_[0]; }

std::vector<std::uint64_t> ProductSpace::enumerate(std::optional<int> N, std::size_t cap) const {
  const int n_sites = num_sites();
  std::vector<int> max_after(n_sites + 1, 0);
  for (int s = n_sites - 1; s >= 0; --s) max_after[s] = max_after[s + 1] + dims_[s] - 1;
  if (N) require(*N >= 0 && *N <= max_after[0], "sector N=" + std::to_string(*N) + " is outside [0, " +
                                                     std::to_string(max_after[0]) + "] (empty sector)",
                 ErrorCode::dimension);
  if (!N) require(full_dim() <= cap, "Hilbert space dimension " + std::to_string(full_dim()) + " exceeds cap",
                  ErrorCode::dimension);

  std::vector<std::uint64_t> out;
  if (!N) {
    out.resize(full_dim());
    std::iota(out.begin(), out.end(), std::uint64_t{0});
    return out;
  }
  // Depth-first enumeration, lowest local charge first.
  std::vector<int> local(n_sites, 0);
  auto rec = [&](auto&& self, int site, int remaining, std::uint64_t code) -> void {
    if (site == n_sites) {
      if (remaining == 0) {
        require(out.size() < cap, "sector dimension exceeds cap " + std::to_string(cap), ErrorCode::dimension);
        out.push_back(code);
      }
      return;
    }
    const int lo = std::max(0, remaining - max_after[site + 1]);
    const int hi = std::min(dims_[site] - 1, remaining);
    for (int q = lo; q <= hi; ++q) self(self, site + 1, remaining - q, code + q * stride_[site]);
  };
  rec(rec, 0, *N, 0);
  return out;
}

HamiltonianAction::HamiltonianAction(const ModelParams& p) : space_(p) {
  const LocalTerms terms = build_local_terms(p);
  for (const auto& t : terms.onsite) {
    std::vector<double> diag(t.op.m.rows());
    for (Eigen::Index i = 0; i < t.op.m.rows(); ++i) diag[i] = t.op.m(i, i);
    onsite_.push_back({t.site, t.coeff, std::move(diag)});
  }
  for (const auto& pr : terms.products(p))
    products_.push_back({pr.site_a, pr.site_b, pr.coeff, pr.op_a.column_map(), pr.op_b.column_map()});
}

Matrix build_dense_hamiltonian(const ModelParams& p, std::optional<int> sector, std::size_t cap) {
  const HamiltonianAction h(p);
  const auto states = h.space().enumerate(sector, cap);
  const auto dim = static_cast<Eigen::Index>(states.size());
  Matrix out = Matrix::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    h.apply(states[col], [&](std::uint64_t code, double amp) {
      auto it = std::lower_bound(states.begin(), states.end(), code);
      require(it != states.end() && *it == code, "build_dense_hamiltonian: term leaves the sector",
              ErrorCode::internal);
      out(it - states.begin(), col) += amp;
    });
  }
  return out;
}

BlockedOperator total_number_operator(const ModelParams& p, std::size_t cap) {
  const ProductSpace space(p);
  const auto states = space.enumerate(std::nullopt, cap);
  std::vector<int> local(space.num_sites());
  std::vector<int> charges(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    space.decode(states[i], local);
    charges[i] = std::accumulate(local.begin(), local.end(), 0);
  }
  BlockedOperator op(sectors_of(charges), sectors_of(charges), 0);
  for (const auto& s : op.row_sectors())
    op.set_block(s.charge, s.charge, Matrix::Identity(s.dim, s.dim) * static_cast<double>(s.charge));
  return op;
}

}  // namespace mcjc::model
