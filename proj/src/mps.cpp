#include "mcjc/mps.hpp"

#include <algorithm>

#include "mcjc/error.hpp"

namespace mcjc::dmrg {

BondSpace::BondSpace(std::vector<Sector> sectors) : sectors_(std::move(sectors)) {
  std::sort(sectors_.begin(), sectors_.end(), [](const Sector& a, const Sector& b) { return a.charge < b.charge; });
  if (sectors_.empty()) return;
  min_charge_ = sectors_.front().charge;
  lookup_.assign(sectors_.back().charge - min_charge_ + 1, -1);
  for (int i = 0; i < size(); ++i) {
    require(sectors_[i].dim > 0, "BondSpace: empty sector", ErrorCode::internal);
    require(lookup_[sectors_[i].charge - min_charge_] < 0, "BondSpace: duplicate sector", ErrorCode::internal);
    lookup_[sectors_[i].charge - min_charge_] = i;
  }
}

int BondSpace::find(int charge) const {
  const int k = charge - min_charge_;
  if (k < 0 || k >= static_cast<int>(lookup_.size())) return -1;
  return lookup_[k];
}

int BondSpace::total_dim() const {
  int d = 0;
  for (const auto& s : sectors_) d += s.dim;
  return d;
}

SiteTensor::SiteTensor(BondSpace left, BondSpace right, std::vector<int> phys_charge)
    : left_(std::move(left)), right_(std::move(right)), phys_(std::move(phys_charge)) {
  const int nl = left_.size();
  right_idx_.assign(phys_.size() * nl, -1);
  blocks_.resize(phys_.size() * nl);
  for (int s = 0; s < phys_dim(); ++s) {
    for (int l = 0; l < nl; ++l) {
      const int r = right_.find(left_[l].charge + phys_[s]);
      right_idx_[s * nl + l] = r;
      if (r >= 0) blocks_[s * nl + l] = Matrix::Zero(left_[l].dim, right_[r].dim);
    }
  }
}

double SiteTensor::squared_norm() const {
  double n = 0.0;
  for (const auto& b : blocks_) n += b.squaredNorm();
  return n;
}

std::size_t SiteTensor::num_elements() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += static_cast<std::size_t>(b.size());
  return n;
}

BondSpace Mps::bond(int b) const {
  require(b >= 0 && b <= num_sites(), "Mps::bond: index out of range");
  return b == num_sites() ? sites.back().right() : sites[b].left();
}

int Mps::max_bond_dim() const {
  int d = 0;
  for (const auto& s : sites) d = std::max(d, s.right().total_dim());
  return d;
}

Mps product_state(const model::ModelParams& p, int N) {
  p.validate();
  require(N >= 0 && N <= p.max_charge(), "product_state: charge out of range", ErrorCode::dimension);
  Mps mps;
  mps.bases = model::chain_bases(p);
  mps.charge = N;
  // Cell i receives floor((i+1)N/L) - floor(iN/L) polaritons, capped by the
  // cell capacity; leftover charge goes to the next cell with room.
  std::vector<int> cell_charge(p.L);
  for (int i = 0; i < p.L; ++i)
    cell_charge[i] = static_cast<int>((static_cast<long>(i + 1) * N) / p.L - (static_cast<long>(i) * N) / p.L);
  int carry = 0;
  for (int i = 0; i < p.L; ++i) {
    cell_charge[i] += carry;
    carry = std::max(0, cell_charge[i] - (p.n_max + 1));
    cell_charge[i] -= carry;
  }
  for (int i = p.L - 1; i >= 0 && carry > 0; --i) {
    const int room = p.n_max + 1 - cell_charge[i];
    const int add = std::min(room, carry);
    cell_charge[i] += add;
    carry -= add;
  }
  require(carry == 0, "product_state: could not place charge", ErrorCode::internal);

  std::vector<int> local(p.num_sites());
  for (int i = 0; i < p.L; ++i) {
    local[model::qubit_site(i)] = cell_charge[i] > 0 ? 1 : 0;
    local[model::cavity_site(i)] = std::max(0, cell_charge[i] - 1);
  }
  int c = 0;
  for (int s = 0; s < p.num_sites(); ++s) {
    BondSpace left({{c, 1}});
    BondSpace right({{c + local[s], 1}});
    SiteTensor t(left, right, mps.bases[s].charge);
    t.block(local[s], 0)(0, 0) = 1.0;
    mps.sites.push_back(std::move(t));
    c += local[s];
  }
  mps.center = 0;
  return mps;
}

Transfer Transfer::identity_left(const BondSpace& bond) {
  Transfer t;
  t.bond = bond;
  t.shift = 0;
  t.blocks.resize(bond.size());
  for (int i = 0; i < bond.size(); ++i) t.blocks[i] = Matrix::Identity(bond[i].dim, bond[i].dim);
  return t;
}

double Transfer::trace() const {
  require(shift == 0, "Transfer::trace: charged transfer has no trace", ErrorCode::internal);
  double t = 0.0;
  for (const auto& b : blocks)
    if (b.size() > 0) t += b.trace();
  return t;
}

double Transfer::contract(const Transfer& right) const {
  require(shift == right.shift, "Transfer::contract: charge shifts differ", ErrorCode::internal);
  double acc = 0.0;
  for (int l = 0; l < bond.size(); ++l) {
    if (blocks[l].size() == 0) continue;
    const int r = right.bond.find(bond[l].charge);
    if (r < 0 || right.blocks[r].size() == 0) continue;
    acc += blocks[l].cwiseProduct(right.blocks[r]).sum();
  }
  return acc;
}

namespace {

std::vector<std::pair<int, double>> op_columns(const SiteTensor& a, const model::LocalOp* op) {
  if (op) return op->column_map();
  std::vector<std::pair<int, double>> id(a.phys_dim());
  for (int s = 0; s < a.phys_dim(); ++s) id[s] = {s, 1.0};
  return id;
}

}  // namespace

Transfer transfer_left(const Transfer& e, const SiteTensor& a, const model::LocalOp* op) {
  const int op_shift = op ? op->charge_shift : 0;
  const auto cols = op_columns(a, op);
  Transfer out;
  out.bond = a.right();
  out.shift = e.shift + op_shift;
  out.blocks.resize(out.bond.size());
  const BondSpace& left = a.left();
  Matrix tmp;
  for (int s = 0; s < a.phys_dim(); ++s) {
    const auto [sp, v] = cols[s];
    if (sp < 0) continue;
    for (int l = 0; l < left.size(); ++l) {
      const int r = a.right_of(s, l);
      if (r < 0 || e.blocks[l].size() == 0) continue;
      const int lp = left.find(left[l].charge + e.shift);
      if (lp < 0 || !a.has_block(sp, lp)) continue;
      const int rp = a.right_of(sp, lp);
      tmp.noalias() = e.blocks[l] * a.block(s, l);
      Matrix& dst = out.blocks[r];
      if (dst.size() == 0) dst = Matrix::Zero(out.bond[rp].dim, out.bond[r].dim);
      dst.noalias() += v * a.block(sp, lp).transpose() * tmp;
    }
  }
  return out;
}

Transfer transfer_right(const Transfer& e, const SiteTensor& a, const model::LocalOp* op) {
  const int op_shift = op ? op->charge_shift : 0;
  const auto cols = op_columns(a, op);
  Transfer out;
  out.bond = a.left();
  // Bra charge minus ket charge on the left bond: the operator's shift is
  // now to the right of the cut, so it is subtracted.
  out.shift = e.shift - op_shift;
  out.blocks.resize(out.bond.size());
  const BondSpace& left = a.left();
  Matrix tmp;
  for (int s = 0; s < a.phys_dim(); ++s) {
    const auto [sp, v] = cols[s];
    if (sp < 0) continue;
    for (int l = 0; l < left.size(); ++l) {
      const int r = a.right_of(s, l);
      if (r < 0 || e.blocks[r].size() == 0) continue;
      const int lp = left.find(left[l].charge + out.shift);
      if (lp < 0 || !a.has_block(sp, lp)) continue;
      tmp.noalias() = e.blocks[r] * a.block(s, l).transpose();
      Matrix& dst = out.blocks[l];
      if (dst.size() == 0) dst = Matrix::Zero(left[lp].dim, left[l].dim);
      dst.noalias() += v * a.block(sp, lp) * tmp;
    }
  }
  return out;
}

}  // namespace mcjc::dmrg
