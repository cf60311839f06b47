#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oracle {

Eig jacobi(Mat a, double tol, int max_sweeps) {
  const int n = static_cast<int>(a.rows());
  Mat v = Mat::Identity(n, n);
  const double scale = std::max(1.0, a.norm());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) < tol * scale) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });
  Eig e{Vec(n), Mat(n, n)};
  for (int k = 0; k < n; ++k) {
    e.values[k] = a(order[k], order[k]);
    e.vectors.col(k) = v.col(order[k]);
  }
  return e;
}

Mat sigma_plus() {
  Mat m = Mat::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

Mat annihilate(int n_max) {
  Mat m = Mat::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return m;
}

namespace {

int site_dim(const mcjc::model::ModelParams& p, int site) { return site % 2 == 0 ? 2 : p.n_max + 1; }

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat embed_many(const mcjc::model::ModelParams& p, const std::vector<std::pair<int, Mat>>& ops) {
  Mat out = Mat::Identity(1, 1);
  for (int s = 0; s < 2 * p.L; ++s) {
    Mat local = Mat::Identity(site_dim(p, s), site_dim(p, s));
    for (const auto& [site, m] : ops)
      if (site == s) local = m * local;
    out = kron(out, local);
  }
  return out;
}

}  // namespace

Mat embed(const mcjc::model::ModelParams& p, int site, const Mat& local) { return embed_many(p, {{site, local}}); }

Mat kron_hamiltonian(const mcjc::model::ModelParams& p) {
  const Mat sp = sigma_plus();
  const Mat a = annihilate(p.n_max);
  Mat sz = Mat::Zero(2, 2);
  sz(0, 0) = -1.0;
  sz(1, 1) = 1.0;
  const Mat n = a.transpose() * a;
  Mat h = Mat::Zero(1, 1);
  auto add = [&](const Mat& m) { h = h.size() == 1 ? m : Mat(h + m); };
  auto hop = [&](int q, int c, double g) {
    const Mat t = embed_many(p, {{q, sp}, {c, a}});
    add(g * (t + t.transpose()));
  };
  for (int i = 0; i < p.L; ++i) {
    add(0.5 * p.omega_z * embed(p, 2 * i, sz));
    add(p.omega_c * embed(p, 2 * i + 1, n));
    hop(2 * i, 2 * i + 1, p.g_r);
    if (i + 1 < p.L) hop(2 * (i + 1), 2 * i + 1, p.g_l);
  }
  if (p.boundary == mcjc::model::Boundary::periodic && p.L > 1) hop(0, 2 * p.L - 1, p.g_l);
  return h;
}

std::vector<int> product_charges(const mcjc::model::ModelParams& p) {
  std::vector<int> q{0};
  for (int s = 0; s < 2 * p.L; ++s) {
    std::vector<int> next;
    for (int c : q)
      for (int k = 0; k < site_dim(p, s); ++k) next.push_back(c + k);
    q.swap(next);
  }
  return q;
}

Mat restrict_to_sector(const Mat& h, const std::vector<int>& charges, int N) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(charges.size()); ++i)
    if (charges[i] == N) idx.push_back(i);
  Mat out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = h(idx[i], idx[j]);
  return out;
}

double sector_ground_energy(const mcjc::model::ModelParams& p, int N) {
  return jacobi(restrict_to_sector(kron_hamiltonian(p), product_charges(p), N)).values[0];
}

}  // namespace oracle
