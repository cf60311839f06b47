#include "mcjc/dmrg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <tuple>

#include "mcjc/env_store.hpp"
#include "mcjc/error.hpp"
#include "mcjc/mpo.hpp"

namespace mcjc::dmrg {

using linalg::Vector;
using MapM = Eigen::Map<Matrix>;
using CMapM = Eigen::Map<const Matrix>;

void SweepConfig::validate() const {
  require(!d_schedule.empty(), "SweepConfig: empty bond-dimension schedule");
  for (std::size_t i = 0; i < d_schedule.size(); ++i) {
    require(d_schedule[i] >= 1, "SweepConfig: bond dimension must be positive");
    if (i > 0) require(d_schedule[i] >= d_schedule[i - 1], "SweepConfig: bond-dimension schedule must be nondecreasing");
  }
  require(max_sweeps >= 1, "SweepConfig: max_sweeps must be positive");
  require(energy_tol > 0, "SweepConfig: energy_tol must be positive");
  require(lanczos_tol > 0, "SweepConfig: lanczos_tol must be positive");
  require(lanczos_max_iter >= 2 && lanczos_krylov >= 2, "SweepConfig: Lanczos limits too small");
  for (double x : noise) require(x >= 0, "SweepConfig: noise must be nonnegative");
}

nlohmann::json to_json(const SweepConfig& c) {
  return {{"d_schedule", c.d_schedule},
          {"max_sweeps", c.max_sweeps},
          {"energy_tol", c.energy_tol},
          {"lanczos_tol", c.lanczos_tol},
          {"lanczos_max_iter", c.lanczos_max_iter},
          {"lanczos_krylov", c.lanczos_krylov},
          {"target_charge", c.target_charge},
          {"noise", c.noise},
          {"seed", c.seed},
          {"memory_budget_bytes", c.memory_budget_bytes},
          {"scratch_dir", c.scratch_dir.string()}};
}

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  require(j.is_object(), "SweepConfig: expected a JSON object", ErrorCode::config);
  SweepConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "d_schedule") c.d_schedule = v.get<std::vector<int>>();
      else if (key == "max_sweeps") c.max_sweeps = v.get<int>();
      else if (key == "energy_tol") c.energy_tol = v.get<double>();
      else if (key == "lanczos_tol") c.lanczos_tol = v.get<double>();
      else if (key == "lanczos_max_iter") c.lanczos_max_iter = v.get<int>();
      else if (key == "lanczos_krylov") c.lanczos_krylov = v.get<int>();
      else if (key == "target_charge") c.target_charge = v.get<int>();
      else if (key == "noise") c.noise = v.get<std::vector<double>>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "memory_budget_bytes") c.memory_budget_bytes = v.get<std::size_t>();
      else if (key == "scratch_dir") c.scratch_dir = v.get<std::string>();
      else fail(ErrorCode::config, "SweepConfig: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("SweepConfig: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

using Side = EnvStore::Side;

Env edge_env(const BondSpace& bond, const std::vector<int>& shift, int state) {
  Env e;
  e.bond = bond;
  e.shift = shift;
  e.blocks.assign(shift.size(), std::vector<Matrix>(bond.size()));
  e.blocks[state][0] = Matrix::Ones(1, 1);
  return e;
}

Env update_left(const Env& e, const SiteTensor& a, const MpoSite& w, const std::vector<int>& shift_right) {
  Env out;
  out.bond = a.right();
  out.shift = shift_right;
  out.blocks.assign(w.right_dim, std::vector<Matrix>(out.bond.size()));
  const BondSpace& left = a.left();
  const int d = a.phys_dim();
  std::vector<Matrix> x(static_cast<std::size_t>(d * left.size()));
  for (int st = 0; st < w.left_dim; ++st) {
    bool any = false;
    for (const auto& entry : w.entries) any |= entry.a == st;
    if (!any) continue;
    // x(s, l) = E_st(l', l) A(s, l)
    for (int s = 0; s < d; ++s)
      for (int l = 0; l < left.size(); ++l) {
        Matrix& xi = x[s * left.size() + l];
        xi.resize(0, 0);
        if (!a.has_block(s, l) || e.blocks[st][l].size() == 0) continue;
        xi.noalias() = e.blocks[st][l] * a.block(s, l);
      }
    for (const auto& entry : w.entries) {
      if (entry.a != st) continue;
      for (int s = 0; s < d; ++s) {
        for (auto [sp, v] : entry.op.by_input[s]) {
          for (int l = 0; l < left.size(); ++l) {
            const Matrix& xi = x[s * left.size() + l];
            if (xi.size() == 0) continue;
            const int lp = left.find(left[l].charge + e.shift[st]);
            if (lp < 0 || !a.has_block(sp, lp)) continue;
            const int r = a.right_of(s, l), rp = a.right_of(sp, lp);
            Matrix& dst = out.blocks[entry.b][r];
            if (dst.size() == 0) dst = Matrix::Zero(out.bond[rp].dim, out.bond[r].dim);
            dst.noalias() += v * a.block(sp, lp).transpose() * xi;
          }
        }
      }
    }
  }
  return out;
}

Env update_right(const Env& e, const SiteTensor& a, const MpoSite& w, const std::vector<int>& shift_left) {
  Env out;
  out.bond = a.left();
  out.shift = shift_left;
  out.blocks.assign(w.left_dim, std::vector<Matrix>(out.bond.size()));
  const BondSpace& left = a.left();
  const int d = a.phys_dim();
  std::vector<Matrix> y(static_cast<std::size_t>(d * left.size()));
  for (int st = 0; st < w.right_dim; ++st) {
    bool any = false;
    for (const auto& entry : w.entries) any |= entry.b == st;
    if (!any) continue;
    // y(s, l) = E_st(r', r) A(s, l)^T
    for (int s = 0; s < d; ++s)
      for (int l = 0; l < left.size(); ++l) {
        Matrix& yi = y[s * left.size() + l];
        yi.resize(0, 0);
        if (!a.has_block(s, l)) continue;
        const int r = a.right_of(s, l);
        if (e.blocks[st][r].size() == 0) continue;
        yi.noalias() = e.blocks[st][r] * a.block(s, l).transpose();
      }
    for (const auto& entry : w.entries) {
      if (entry.b != st) continue;
      for (int s = 0; s < d; ++s) {
        for (auto [sp, v] : entry.op.by_input[s]) {
          for (int l = 0; l < left.size(); ++l) {
            const Matrix& yi = y[s * left.size() + l];
            if (yi.size() == 0) continue;
            const int lp = left.find(left[l].charge + shift_left[entry.a]);
            if (lp < 0 || !a.has_block(sp, lp)) continue;
            Matrix& dst = out.blocks[entry.a][l];
            if (dst.size() == 0) dst = Matrix::Zero(left[lp].dim, left[l].dim);
            dst.noalias() += v * a.block(sp, lp) * yi;
          }
        }
      }
    }
  }
  return out;
}

/// Block layout of a two-site wavefunction psi(l, s1, s2, r), flattened.
struct PsiLayout {
  struct Block {
    int l, s1, s2, r;
    Eigen::Index rows, cols;
    std::size_t offset;
  };
  BondSpace left, right;
  std::vector<int> q1, q2;
  std::vector<Block> blocks;
  std::vector<int> lookup;
  std::size_t size = 0;

  PsiLayout(BondSpace l, BondSpace r, std::vector<int> phys1, std::vector<int> phys2)
      : left(std::move(l)), right(std::move(r)), q1(std::move(phys1)), q2(std::move(phys2)) {
    const int d1 = static_cast<int>(q1.size()), d2 = static_cast<int>(q2.size());
    lookup.assign(static_cast<std::size_t>(left.size() * d1 * d2), -1);
    for (int li = 0; li < left.size(); ++li)
      for (int s1 = 0; s1 < d1; ++s1)
        for (int s2 = 0; s2 < d2; ++s2) {
          const int ri = right.find(left[li].charge + q1[s1] + q2[s2]);
          if (ri < 0) continue;
          lookup[(li * d1 + s1) * d2 + s2] = static_cast<int>(blocks.size());
          blocks.push_back({li, s1, s2, ri, left[li].dim, right[ri].dim, size});
          size += static_cast<std::size_t>(left[li].dim) * static_cast<std::size_t>(right[ri].dim);
        }
  }

  int find(int l, int s1, int s2) const {
    const int d1 = static_cast<int>(q1.size()), d2 = static_cast<int>(q2.size());
    return lookup[(l * d1 + s1) * d2 + s2];
  }
};

/// Effective two-site Hamiltonian L W1 W2 R acting on a PsiLayout vector,
/// with the contraction order fixed once per step.
class TwoSiteOperator {
 public:
  TwoSiteOperator(const Env& L, const Env& R, const MpoSite& w1, const MpoSite& w2, const PsiLayout& lay)
      : lay_(lay) {
    std::map<std::tuple<int, int, int, int, int>, int> t_index;  // (b, l', s1', s2, r)
    for (int k = 0; k < static_cast<int>(lay.blocks.size()); ++k) {
      const auto& blk = lay.blocks[k];
      for (int a = 0; a < w1.left_dim; ++a) {
        const Matrix& env = L.blocks[a][blk.l];
        if (env.size() == 0) continue;
        const int lp = lay.left.find(lay.left[blk.l].charge + L.shift[a]);
        if (lp < 0) continue;
        Stage1 st{&env, k, {}};
        for (const auto& e : w1.entries) {
          if (e.a != a) continue;
          for (auto [s1p, v] : e.op.by_input[blk.s1]) {
            const auto key = std::make_tuple(e.b, lp, s1p, blk.s2, blk.r);
            auto it = t_index.find(key);
            if (it == t_index.end()) {
              it = t_index.emplace(key, static_cast<int>(t_.size())).first;
              t_.push_back(Matrix::Zero(lay.left[lp].dim, lay.right[blk.r].dim));
              t_keys_.push_back(key);
            }
            st.targets.emplace_back(it->second, v);
          }
        }
        if (!st.targets.empty()) stage1_.push_back(std::move(st));
      }
    }
    for (int t = 0; t < static_cast<int>(t_keys_.size()); ++t) {
      const auto [b, lp, s1p, s2, r] = t_keys_[t];
      for (int c = 0; c < w2.right_dim; ++c) {
        const Matrix& env = R.blocks[c][r];
        if (env.size() == 0) continue;
        const int rp = lay.right.find(lay.right[r].charge + R.shift[c]);
        if (rp < 0) continue;
        Stage2 st{t, &env, {}};
        for (const auto& e : w2.entries) {
          if (e.a != b || e.b != c) continue;
          for (auto [s2p, v] : e.op.by_input[s2]) {
            const int out = lay.find(lp, s1p, s2p);
            if (out < 0 || lay.blocks[out].r != rp) continue;
            st.targets.emplace_back(out, v);
          }
        }
        if (!st.targets.empty()) stage2_.push_back(std::move(st));
      }
    }
  }

  void apply(std::span<const double> in, std::span<double> out) {
    for (auto& t : t_) t.setZero();
    for (const auto& st : stage1_) {
      const auto& blk = lay_.blocks[st.psi_block];
      const CMapM psi(in.data() + blk.offset, blk.rows, blk.cols);
      if (st.targets.size() == 1) {
        t_[st.targets[0].first].noalias() += st.targets[0].second * (*st.env * psi);
        continue;
      }
      tmp_.noalias() = *st.env * psi;
      for (auto [t, v] : st.targets) t_[t] += v * tmp_;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& st : stage2_) {
      if (st.targets.size() == 1) {
        const auto& blk = lay_.blocks[st.targets[0].first];
        MapM dst(out.data() + blk.offset, blk.rows, blk.cols);
        dst.noalias() += st.targets[0].second * (t_[st.t_block] * st.env->transpose());
        continue;
      }
      tmp_.noalias() = t_[st.t_block] * st.env->transpose();
      for (auto [o, v] : st.targets) {
        const auto& blk = lay_.blocks[o];
        MapM(out.data() + blk.offset, blk.rows, blk.cols) += v * tmp_;
      }
    }
  }

 private:
  struct Stage1 {
    const Matrix* env;
    int psi_block;
    std::vector<std::pair<int, double>> targets;
  };
  struct Stage2 {
    int t_block;
    const Matrix* env;
    std::vector<std::pair<int, double>> targets;
  };
  const PsiLayout& lay_;
  std::vector<Matrix> t_;
  std::vector<std::tuple<int, int, int, int, int>> t_keys_;
  std::vector<Stage1> stage1_;
  std::vector<Stage2> stage2_;
  Matrix tmp_;
};

Vector contract_pair(const SiteTensor& a, const SiteTensor& b, const PsiLayout& lay) {
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(lay.size));
  for (const auto& blk : lay.blocks) {
    if (!a.has_block(blk.s1, blk.l)) continue;
    const int m = a.right_of(blk.s1, blk.l);
    if (!b.has_block(blk.s2, m)) continue;
    MapM(psi.data() + blk.offset, blk.rows, blk.cols).noalias() = a.block(blk.s1, blk.l) * b.block(blk.s2, m);
  }
  return psi;
}

struct SplitResult {
  SiteTensor left, right;
  double discarded = 0.0;
  int kept = 0;
  std::vector<double> weights;  // all Schmidt weights before truncation, normalized
};

constexpr double kWeightCutoff = 1e-14;
constexpr double kMultipletTol = 1e-12;
constexpr double kRoundoff = 1e-15;

/// SVD of psi across the middle bond, keeping at most D states (plus the
/// rest of a degenerate multiplet at the edge). The singular values are
/// absorbed into the right tensor when `absorb_right`, else the left one.
SplitResult split(const PsiLayout& lay, const Vector& psi, int D, bool absorb_right) {
  const int d1 = static_cast<int>(lay.q1.size()), d2 = static_cast<int>(lay.q2.size());
  struct Mid {
    std::vector<std::pair<int, int>> rows;  // (l, s1)
    std::vector<std::pair<int, int>> cols;  // (s2, r)
    std::map<std::pair<int, int>, Eigen::Index> row_off, col_off;
    Eigen::Index nrows = 0, ncols = 0;
    linalg::SvdResult svd;
  };
  std::map<int, Mid> mids;
  for (const auto& blk : lay.blocks) {
    const int m = lay.left[blk.l].charge + lay.q1[blk.s1];
    Mid& mid = mids[m];
    if (mid.row_off.emplace(std::pair{blk.l, blk.s1}, mid.nrows).second) {
      mid.rows.emplace_back(blk.l, blk.s1);
      mid.nrows += blk.rows;
    }
    if (mid.col_off.emplace(std::pair{blk.s2, blk.r}, mid.ncols).second) {
      mid.cols.emplace_back(blk.s2, blk.r);
      mid.ncols += blk.cols;
    }
  }
  struct Candidate {
    double w;
    int m;
    int k;
  };
  std::vector<Candidate> all;
  double total = 0.0;
  for (auto& [m, mid] : mids) {
    Matrix mat = Matrix::Zero(mid.nrows, mid.ncols);
    for (const auto& blk : lay.blocks) {
      if (lay.left[blk.l].charge + lay.q1[blk.s1] != m) continue;
      mat.block(mid.row_off.at({blk.l, blk.s1}), mid.col_off.at({blk.s2, blk.r}), blk.rows, blk.cols) =
          CMapM(psi.data() + blk.offset, blk.rows, blk.cols);
    }
    mid.svd = linalg::svd(mat);
    for (Eigen::Index k = 0; k < mid.svd.s.size(); ++k) {
      const double w = mid.svd.s[k] * mid.svd.s[k];
      total += w;
      all.push_back({w, m, static_cast<int>(k)});
    }
  }
  require(total > 0, "dmrg: zero wavefunction", ErrorCode::internal);
  std::stable_sort(all.begin(), all.end(), [](const Candidate& x, const Candidate& y) {
    if (x.w != y.w) return x.w > y.w;
    if (x.m != y.m) return x.m < y.m;
    return x.k < y.k;
  });

  SplitResult out;
  for (auto& c : all) out.weights.push_back(c.w / total);
  std::size_t keep = 0;
  while (keep < all.size() && keep < static_cast<std::size_t>(D) && all[keep].w / total > kWeightCutoff) ++keep;
  if (keep == 0) keep = 1;
  // Keep degenerate multiplets whole. Weights count as equal when they
  // agree to kMultipletTol relative, or to round-off of the total.
  const double edge = all[keep - 1].w / total;
  if (keep < all.size() && edge > kWeightCutoff)
    while (keep < all.size() && edge - all[keep].w / total <= kMultipletTol * edge + kRoundoff) ++keep;

  std::map<int, int> kept_per_m;
  double kept_weight = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    kept_per_m[all[i].m] = std::max(kept_per_m[all[i].m], all[i].k + 1);
    kept_weight += all[i].w;
  }
  // Singular values inside a sector come sorted, so keeping the top k_m of
  // each sector is the same set as the global selection.
  out.discarded = std::max(0.0, 1.0 - kept_weight / total);
  std::vector<Sector> mid_sectors;
  for (auto [m, k] : kept_per_m) mid_sectors.push_back({m, k});
  BondSpace mid_bond(mid_sectors);
  out.kept = mid_bond.total_dim();
  const double renorm = 1.0 / std::sqrt(kept_weight);

  out.left = SiteTensor(lay.left, mid_bond, lay.q1);
  out.right = SiteTensor(mid_bond, lay.right, lay.q2);
  for (const auto& [m, k] : kept_per_m) {
    const Mid& mid = mids.at(m);
    const int mi = mid_bond.find(m);
    Vector s = mid.svd.s.head(k) * renorm;
    for (auto [l, s1] : mid.rows) {
      Matrix u = mid.svd.u.block(mid.row_off.at({l, s1}), 0, lay.left[l].dim, k);
      if (!absorb_right) u = u * s.asDiagonal();
      require(out.left.right_of(s1, l) == mi, "dmrg: split sector mismatch", ErrorCode::internal);
      out.left.block(s1, l) = std::move(u);
    }
    for (auto [s2, r] : mid.cols) {
      Matrix vt = mid.svd.v.block(mid.col_off.at({s2, r}), 0, lay.right[r].dim, k).transpose();
      if (absorb_right) vt = s.asDiagonal() * vt;
      require(out.right.right_of(s2, mi) == r, "dmrg: split sector mismatch", ErrorCode::internal);
      out.right.block(s2, mi) = std::move(vt);
    }
  }
  (void)d1;
  (void)d2;
  return out;
}

double entropy_of(const std::vector<double>& weights) {
  double s = 0.0;
  for (double w : weights)
    if (w > 1e-300) s -= w * std::log(w);
  return s;
}

/// Schmidt weights at every bond, from a copy of the state moved left to
/// right with exact SVDs (no truncation). Requires center == 0.
std::vector<double> entropy_profile(Mps mps) {
  const int n = mps.num_sites();
  std::vector<double> out(n - 1, 0.0);
  for (int j = 0; j + 1 < n; ++j) {
    const SiteTensor& c = mps.sites[j];
    const BondSpace& left = c.left();
    const BondSpace& right = c.right();
    std::vector<Sector> new_sectors;
    std::vector<double> weights;
    std::map<int, linalg::SvdResult> svds;
    std::map<int, std::vector<std::pair<int, Eigen::Index>>> rows;  // r -> (s*nl + l, offset)
    for (int ri = 0; ri < right.size(); ++ri) {
      Eigen::Index nrows = 0;
      auto& rl = rows[ri];
      for (int s = 0; s < c.phys_dim(); ++s)
        for (int l = 0; l < left.size(); ++l)
          if (c.right_of(s, l) == ri) {
            rl.emplace_back(s * left.size() + l, nrows);
            nrows += left[l].dim;
          }
      Matrix m = Matrix::Zero(nrows, right[ri].dim);
      for (auto [key, off] : rl) {
        const int s = key / left.size(), l = key % left.size();
        m.block(off, 0, left[l].dim, right[ri].dim) = c.block(s, l);
      }
      auto dec = linalg::svd(m);
      int k = 0;
      for (Eigen::Index i = 0; i < dec.s.size(); ++i) {
        weights.push_back(dec.s[i] * dec.s[i]);
        if (dec.s[i] > 1e-15) ++k;
      }
      if (k > 0) new_sectors.push_back({right[ri].charge, k});
      svds.emplace(ri, std::move(dec));
    }
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
    out[j] = entropy_of(weights);

    BondSpace mid(new_sectors);
    SiteTensor a(left, mid, c.phys_charges());
    const SiteTensor& b = mps.sites[j + 1];
    SiteTensor next(mid, b.right(), b.phys_charges());
    for (int ri = 0; ri < right.size(); ++ri) {
      const int mi = mid.find(right[ri].charge);
      if (mi < 0) continue;
      const int k = mid[mi].dim;
      const auto& dec = svds.at(ri);
      for (auto [key, off] : rows.at(ri)) {
        const int s = key / left.size(), l = key % left.size();
        a.block(s, l) = dec.u.block(off, 0, left[l].dim, k);
      }
      const Matrix sv = dec.s.head(k).asDiagonal() * dec.v.leftCols(k).transpose();
      for (int s = 0; s < b.phys_dim(); ++s)
        if (b.has_block(s, ri)) next.block(s, mi) = sv * b.block(s, ri);
    }
    mps.sites[j] = std::move(a);
    mps.sites[j + 1] = std::move(next);
  }
  return out;
}

Vector noise_vector(std::size_t dim, std::uint64_t seed) { return linalg::seeded_vector(dim, seed); }

bool verbose() {
  static const bool v = [] {
    const char* s = std::getenv("MCJC_VERBOSE");
    return s && *s && std::string(s) != "0";
  }();
  return v;
}

}  // namespace

double energy_expectation(const Mps& mps, const model::ModelParams& params) {
  const Mpo mpo = build_mpo(params);
  const int n = mps.num_sites();
  Env e = edge_env(mps.bond(0), mpo.shift[0], Mpo::kStart);
  Transfer norm = Transfer::identity_left(mps.bond(0));
  for (int j = 0; j < n; ++j) {
    e = update_left(e, mps.sites[j], mpo.sites[j], mpo.shift[j + 1]);
    norm = transfer_left(norm, mps.sites[j]);
  }
  const Matrix& h = e.blocks[Mpo::kDone][0];
  return (h.size() ? h(0, 0) : 0.0) / norm.trace();
}

GroundStateResult run(const model::ModelParams& params, const SweepConfig& config) {
  params.validate();
  config.validate();
  const int N = config.target_charge;
  require(N >= 0 && N <= params.max_charge(),
          "dmrg::run: sector N=" + std::to_string(N) + " is empty for these parameters", ErrorCode::dimension);

  const Mpo mpo = build_mpo(params);
  Mps mps = product_state(params, N);
  const int n = mps.num_sites();
  EnvStore store(n, config.memory_budget_bytes, config.scratch_dir);
  store.set_focus(0);
  store.put(Side::left, 0, edge_env(mps.bond(0), mpo.shift[0], Mpo::kStart));
  store.put(Side::right, n, edge_env(mps.bond(n), mpo.shift[n], Mpo::kDone));
  for (int b = n - 1; b >= 1; --b) {
    Env r = update_right(store.get(Side::right, b + 1), mps.sites[b], mpo.sites[b], mpo.shift[b]);
    store.put(Side::right, b, std::move(r));
  }

  GroundStateResult result;
  const linalg::LanczosOptions lopts{config.lanczos_tol, 1.0, config.lanczos_max_iter, config.lanczos_krylov};
  double previous = std::numeric_limits<double>::quiet_NaN();
  bool previous_clean = false;

  auto optimize = [&](int j, int D, double noise, bool to_right, std::uint64_t noise_seed, SweepStats& stats) {
    store.set_focus(j);
    const Env& L = store.get(Side::left, j);
    const Env& R = store.get(Side::right, j + 2);
    const PsiLayout lay(mps.sites[j].left(), mps.sites[j + 1].right(), mps.sites[j].phys_charges(),
                        mps.sites[j + 1].phys_charges());
    TwoSiteOperator h(L, R, mpo.sites[j], mpo.sites[j + 1], lay);
    Vector psi = contract_pair(mps.sites[j], mps.sites[j + 1], lay);
    if (psi.norm() < 1e-12) psi = noise_vector(lay.size, noise_seed ^ 0xabcdef);
    const auto eig = linalg::lanczos_lowest(
        [&h](std::span<const double> x, std::span<double> y) { h.apply(x, y); }, lay.size, psi, lopts);
    psi = eig.vector;
    if (noise > 0 && lay.size > 1) {
      psi += noise * noise_vector(lay.size, noise_seed);
      psi.normalize();
    }
    SplitResult sp = split(lay, psi, D, to_right);
    stats.max_truncation = std::max(stats.max_truncation, sp.discarded);
    stats.max_kept = std::max(stats.max_kept, sp.kept);
    stats.energy = eig.value;
    mps.sites[j] = std::move(sp.left);
    mps.sites[j + 1] = std::move(sp.right);
    if (to_right) {
      Env e = update_left(store.get(Side::left, j), mps.sites[j], mpo.sites[j], mpo.shift[j + 1]);
      store.put(Side::left, j + 1, std::move(e));
      mps.center = j + 1;
    } else {
      Env e = update_right(store.get(Side::right, j + 2), mps.sites[j + 1], mpo.sites[j + 1], mpo.shift[j + 1]);
      store.put(Side::right, j + 1, std::move(e));
      mps.center = j;
    }
  };

  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    const auto t0 = std::chrono::steady_clock::now();
    const int D = config.d_schedule[std::min<std::size_t>(sweep, config.d_schedule.size() - 1)];
    const double noise = sweep < static_cast<int>(config.noise.size()) ? config.noise[sweep] : 0.0;
    SweepStats stats;
    stats.bond_dim = D;
    for (int j = 0; j + 1 < n; ++j)
      optimize(j, D, noise, true, config.seed + 1000003ull * sweep + 2ull * j, stats);
    for (int j = n - 2; j >= 0; --j)
      optimize(j, D, noise, false, config.seed + 1000003ull * sweep + 2ull * j + 1, stats);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.sweeps.push_back(stats);
    result.truncation_error_per_sweep.push_back(stats.max_truncation);
    result.n_sweeps_used = sweep + 1;
    if (verbose())
      std::fprintf(stderr, "[dmrg] sweep %d D=%d kept=%d E=%.14f trunc=%.3e noise=%.1e %.2fs\n", sweep, D,
                   stats.max_kept, stats.energy, stats.max_truncation, noise, stats.seconds);

    const bool clean = noise == 0.0 && sweep + 1 >= static_cast<int>(config.d_schedule.size());
    if (clean && previous_clean &&
        std::abs(stats.energy - previous) <= config.energy_tol * std::max(1.0, std::abs(stats.energy))) {
      result.converged = true;
      break;
    }
    previous = stats.energy;
    previous_clean = clean;
  }

  // Energy of the final (truncated) state from the center site.
  {
    Env e = update_left(store.get(Side::left, 0), mps.sites[0], mpo.sites[0], mpo.shift[1]);
    const Env& r = store.get(Side::right, 1);
    double h = 0.0;
    for (std::size_t k = 0; k < e.blocks.size(); ++k)
      for (int l = 0; l < e.bond.size(); ++l)
        if (e.blocks[k][l].size() && r.blocks[k][l].size()) h += e.blocks[k][l].cwiseProduct(r.blocks[k][l]).sum();
    result.energy = h / mps.sites[0].squared_norm();
  }
  result.spills = store.spill_count();
  result.entropy_profile = entropy_profile(mps);
  result.state = std::make_shared<const Mps>(std::move(mps));
  return result;
}

double entanglement_entropy(const GroundStateResult& result, int cut) {
  const int n = static_cast<int>(result.entropy_profile.size()) + 1;
  require(cut >= 1 && cut < n, "entanglement_entropy: cut " + std::to_string(cut) + " outside [1, " +
                                   std::to_string(n - 1) + "]");
  return result.entropy_profile[cut - 1];
}

}  // namespace mcjc::dmrg
