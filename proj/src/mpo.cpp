#include "mcjc/mpo.hpp"

#include <algorithm>
#include <map>

#include "mcjc/error.hpp"

namespace mcjc::dmrg {

SparseOp sparsify(const linalg::Matrix& m, int charge_shift) {
  SparseOp op;
  op.charge_shift = charge_shift;
  op.by_input.resize(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(r, c) != 0.0) {
        op.elems.emplace_back(static_cast<int>(r), static_cast<int>(c), m(r, c));
        op.by_input[c].emplace_back(static_cast<int>(r), m(r, c));
      }
  return op;
}

int Mpo::max_bond_dim() const {
  int d = 0;
  for (const auto& s : shift) d = std::max(d, static_cast<int>(s.size()));
  return d;
}

Mpo build_mpo(const model::ModelParams& p) {
  const model::LocalTerms terms = model::build_local_terms(p);
  const auto products = terms.products(p);
  const auto bases = model::chain_bases(p);
  const int n = p.num_sites();

  // Channel assignment by greedy interval colouring over bonds site_a+1..site_b.
  std::vector<int> channel(products.size(), -1);
  std::vector<int> busy_until;  // channel -> last bond it occupies
  std::vector<std::size_t> order(products.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return products[x].site_a < products[y].site_a; });
  for (std::size_t idx : order) {
    const auto& pr = products[idx];
    int ch = -1;
    for (std::size_t c = 0; c < busy_until.size(); ++c)
      if (busy_until[c] <= pr.site_a) {
        ch = static_cast<int>(c);
        break;
      }
    if (ch < 0) {
      ch = static_cast<int>(busy_until.size());
      busy_until.push_back(0);
    }
    busy_until[ch] = pr.site_b;
    channel[idx] = ch;
  }

  const int dim = 2 + static_cast<int>(busy_until.size());
  Mpo mpo;
  mpo.shift.assign(n + 1, std::vector<int>(dim, 0));
  for (std::size_t i = 0; i < products.size(); ++i) {
    const auto& pr = products[i];
    for (int b = pr.site_a + 1; b <= pr.site_b; ++b) mpo.shift[b][2 + channel[i]] = pr.op_a.charge_shift;
  }

  for (int s = 0; s < n; ++s) {
    // Accumulate dense operators per (a, b), then sparsify.
    std::map<std::pair<int, int>, std::pair<linalg::Matrix, int>> acc;
    auto add = [&](int a, int b, const linalg::Matrix& m, int shift) {
      auto it = acc.find({a, b});
      if (it == acc.end()) acc.emplace(std::pair{a, b}, std::pair{m, shift});
      else {
        require(it->second.second == shift, "build_mpo: mixed charge shifts in one entry", ErrorCode::internal);
        it->second.first += m;
      }
    };
    const int d = bases[s].dim;
    const linalg::Matrix id = linalg::Matrix::Identity(d, d);
    add(Mpo::kStart, Mpo::kStart, id, 0);
    add(Mpo::kDone, Mpo::kDone, id, 0);
    for (const auto& t : terms.onsite)
      if (t.site == s) add(Mpo::kStart, Mpo::kDone, t.coeff * t.op.m, 0);
    for (std::size_t i = 0; i < products.size(); ++i) {
      const auto& pr = products[i];
      const int ch = 2 + channel[i];
      if (pr.site_a == s) add(Mpo::kStart, ch, pr.coeff * pr.op_a.m, pr.op_a.charge_shift);
      else if (pr.site_b == s) add(ch, Mpo::kDone, pr.op_b.m, pr.op_b.charge_shift);
      else if (pr.site_a < s && s < pr.site_b) add(ch, ch, id, 0);
    }
    MpoSite site;
    site.left_dim = dim;
    site.right_dim = dim;
    for (auto& [key, val] : acc) site.entries.push_back({key.first, key.second, sparsify(val.first, val.second)});
    mpo.sites.push_back(std::move(site));
  }
  return mpo;
}

}  // namespace mcjc::dmrg
