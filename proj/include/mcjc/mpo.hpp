#pragma once

#include <vector>

#include "mcjc/model.hpp"

namespace mcjc::dmrg {

/// Nonzero elements (out, in, value) of a local operator.
struct SparseOp {
  int charge_shift = 0;
  std::vector<std::tuple<int, int, double>> elems;
  /// For each input state, the list of (out, value).
  std::vector<std::vector<std::pair<int, double>>> by_input;
};

SparseOp sparsify(const linalg::Matrix& m, int charge_shift);

struct MpoEntry {
  int a;  // left automaton state
  int b;  // right automaton state
  SparseOp op;
};

struct MpoSite {
  int left_dim = 0;
  int right_dim = 0;
  std::vector<MpoEntry> entries;
};

/// Matrix-product operator written as a finite-state automaton. On every bond
/// state 0 means "nothing placed yet" and state 1 means "term complete";
/// further states are channels carrying the first operator of a two-site
/// product. `shift[b][k]` is the charge (bra minus ket) accumulated to the
/// left of bond b in state k.
struct Mpo {
  std::vector<MpoSite> sites;
  std::vector<std::vector<int>> shift;  // size num_sites + 1

  static constexpr int kStart = 0;
  static constexpr int kDone = 1;

  int num_sites() const { return static_cast<int>(sites.size()); }
  int bond_dim(int b) const { return static_cast<int>(shift[b].size()); }
  int max_bond_dim() const;
};

/// Builds the Hamiltonian MPO from the model's local terms. Two-site products
/// get a channel spanning their sites, so the periodic wrap-around bond costs
/// two extra channels on every bond.
Mpo build_mpo(const model::ModelParams& p);

}  // namespace mcjc::dmrg
