#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mcjc/linalg.hpp"
#include "mcjc/model.hpp"

namespace mcjc::dmrg {

using linalg::Matrix;

/// Virtual bond of a matrix-product state. Sector charge is the total
/// polariton number of everything to the left of the bond.
class BondSpace {
 public:
  BondSpace() = default;
  explicit BondSpace(std::vector<Sector> sectors);

  int find(int charge) const;  // -1 when absent
  int size() const { return static_cast<int>(sectors_.size()); }
  const Sector& operator[](int i) const { return sectors_[i]; }
  const std::vector<Sector>& sectors() const { return sectors_; }
  int total_dim() const;

 private:
  std::vector<Sector> sectors_;  // ascending charge
  int min_charge_ = 0;
  std::vector<int> lookup_;      // charge - min_charge_ -> sector index or -1
};

/// One MPS site: for each physical state s and left sector l, a dense block
/// A[s](l, r) into the right sector with charge c_l + q_s (when present).
class SiteTensor {
 public:
  SiteTensor() = default;
  SiteTensor(BondSpace left, BondSpace right, std::vector<int> phys_charge);

  const BondSpace& left() const { return left_; }
  const BondSpace& right() const { return right_; }
  int phys_dim() const { return static_cast<int>(phys_.size()); }
  int phys_charge(int s) const { return phys_[s]; }
  const std::vector<int>& phys_charges() const { return phys_; }

  /// Right sector index for (s, l), or -1 when the block does not exist.
  int right_of(int s, int l) const { return right_idx_[s * left_.size() + l]; }
  Matrix& block(int s, int l) { return blocks_[s * left_.size() + l]; }
  const Matrix& block(int s, int l) const { return blocks_[s * left_.size() + l]; }
  bool has_block(int s, int l) const { return right_of(s, l) >= 0; }

  double squared_norm() const;
  std::size_t num_elements() const;

 private:
  BondSpace left_, right_;
  std::vector<int> phys_;
  std::vector<int> right_idx_;
  std::vector<Matrix> blocks_;
};

/// Finite matrix-product state with a fixed total charge.
struct Mps {
  std::vector<model::SiteBasis> bases;
  std::vector<SiteTensor> sites;
  int charge = 0;
  int center = 0;  // sites < center are left-canonical, sites > center right-canonical

  int num_sites() const { return static_cast<int>(sites.size()); }
  BondSpace bond(int b) const;  // b in [0, num_sites]
  int max_bond_dim() const;
};

/// Product state with cell charges distributed as evenly as the filling
/// allows; a cell with k > 0 polaritons holds a qubit excitation and k - 1
/// photons.
Mps product_state(const model::ModelParams& p, int N);

/// Contraction of bra and ket bonds at one cut, one block per ket sector;
/// the bra sector of ket sector l has charge c_l + shift.
struct Transfer {
  BondSpace bond;
  int shift = 0;
  std::vector<Matrix> blocks;  // bra x ket, empty when absent

  static Transfer identity_left(const BondSpace& bond);
  double trace() const;
  double contract(const Transfer& right) const;  // sum over sectors of <this, right> (Frobenius)
};

/// Pushes a left transfer through one site, optionally inserting a local
/// operator: E'(r', r) = sum A[s'](l', r')^T E(l', l) op(s', s) A[s](l, r).
Transfer transfer_left(const Transfer& e, const SiteTensor& a, const model::LocalOp* op = nullptr);

/// Right-side counterpart: E'(l', l) = sum A[s'](l', r') E(r', r) op(s', s) A[s](l, r).
Transfer transfer_right(const Transfer& e, const SiteTensor& a, const model::LocalOp* op = nullptr);

}  // namespace mcjc::dmrg
