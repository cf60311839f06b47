#include "mcjc/observables.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mcjc/error.hpp"
#include "mcjc/records.hpp"

namespace mcjc::obs {

using dmrg::Mps;
using dmrg::Transfer;
using model::LocalOp;

std::string to_string(Species s) { return s == Species::qubit ? "qubit" : "cavity"; }

double DensityProfile::total() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n_q.size(); ++i) t += n_q[i] + n_r[i];
  return t;
}

namespace {

double mean(const std::vector<double>& v, int lo, int hi) {
  require(lo >= 0 && hi < static_cast<int>(v.size()) && lo <= hi, "DensityProfile: bad cell range");
  double s = 0.0;
  for (int i = lo; i <= hi; ++i) s += v[i];
  return s / (hi - lo + 1);
}

struct Request {
  int x, op_x;
  int y, op_y;  // y < 0: one-point
};

/// Batched expectation values over a canonical state. Requests are sorted
/// by first site; the identity transfer to the left is carried along once.
std::vector<double> evaluate(const Mps& mps, const std::vector<LocalOp>& ops, const std::vector<Request>& reqs) {
  require(mps.center == 0, "observables: state must have its center at site 0");
  const int n = mps.num_sites();
  const double norm = mps.sites[0].squared_norm();
  require(norm > 0, "observables: zero state");
  std::vector<double> out(reqs.size(), 0.0);
  std::vector<std::size_t> order(reqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(reqs[a].x, reqs[a].op_x) < std::tie(reqs[b].x, reqs[b].op_x);
  });
  Transfer left = Transfer::identity_left(mps.bond(0));
  std::size_t k = 0;
  for (int a = 0; a < n && k < order.size(); ++a) {
    while (k < order.size() && reqs[order[k]].x == a) {
      const int op_x = reqs[order[k]].op_x;
      std::size_t end = k;
      int max_y = -1;
      while (end < order.size() && reqs[order[end]].x == a && reqs[order[end]].op_x == op_x) {
        max_y = std::max(max_y, reqs[order[end]].y);
        ++end;
      }
      Transfer t = transfer_left(left, mps.sites[a], &ops[op_x]);
      std::multimap<int, std::size_t> by_y;
      for (std::size_t m = k; m < end; ++m) {
        const Request& r = reqs[order[m]];
        if (r.y < 0) out[order[m]] = t.trace() / norm;
        else by_y.emplace(r.y, order[m]);
      }
      for (int b = a + 1; b <= max_y; ++b) {
        auto [lo, hi] = by_y.equal_range(b);
        for (auto it = lo; it != hi; ++it)
          out[it->second] = transfer_left(t, mps.sites[b], &ops[reqs[it->second].op_y]).trace() / norm;
        if (b < max_y) t = transfer_left(t, mps.sites[b]);
      }
      k = end;
    }
    left = transfer_left(left, mps.sites[a]);
  }
  return out;
}

void axpy(Transfer& dst, const Transfer& src, double a) {
  if (dst.blocks.empty()) {
    dst.bond = src.bond;
    dst.shift = src.shift;
    dst.blocks.resize(src.blocks.size());
  }
  for (std::size_t i = 0; i < src.blocks.size(); ++i) {
    if (src.blocks[i].size() == 0) continue;
    if (dst.blocks[i].size() == 0) dst.blocks[i] = a * src.blocks[i];
    else dst.blocks[i] += a * src.blocks[i];
  }
}

int species_site(Species s, int cell) { return s == Species::qubit ? model::qubit_site(cell) : model::cavity_site(cell); }

LocalOp squared(const LocalOp& op) { return {op.name + "^2", 2 * op.charge_shift, op.m * op.m}; }

void check_window(const model::ModelParams& p, const Window& w) {
  require(w.lo >= 0 && w.hi < p.L && w.lo <= w.hi, "observables: window outside the chain");
  require(w.r_max >= 3, "observables: window allows fewer than 4 separations");
  if (w.wrap) require(w.r_max < p.L, "observables: separation exceeds the ring");
  else require(w.r_max <= w.hi - w.lo, "observables: separation exceeds the window");
}

/// Pairs (i, j) of cells at separation r used for averaging.
std::vector<std::pair<int, int>> cell_pairs(const model::ModelParams& p, const Window& w, int r) {
  std::vector<std::pair<int, int>> out;
  if (w.wrap) {
    for (int i = w.lo; i <= w.hi; ++i) out.emplace_back(i, (i + r) % p.L);
  } else {
    for (int i = w.lo; i + r <= w.hi; ++i) out.emplace_back(i, i + r);
  }
  return out;
}

}  // namespace

double DensityProfile::mean_q(int lo, int hi) const { return mean(n_q, lo, hi); }
double DensityProfile::mean_r(int lo, int hi) const { return mean(n_r, lo, hi); }

Window default_window(const model::ModelParams& p) {
  Window w;
  if (p.boundary == model::Boundary::periodic) {
    w.lo = 0;
    w.hi = p.L - 1;
    w.wrap = true;
  } else {
    const int width = std::max(1, p.L / 2);
    w.lo = (p.L - width) / 2;
    w.hi = w.lo + width - 1;
  }
  w.r_max = p.L / 4;
  return w;
}

DensityProfile local_densities(const Mps& mps, const model::ModelParams& p) {
  require(mps.num_sites() == p.num_sites(), "local_densities: state and parameters disagree on the chain length");
  const std::vector<LocalOp> ops{model::qubit_number(), model::photon_number(p.n_max)};
  std::vector<Request> reqs;
  for (int i = 0; i < p.L; ++i) {
    reqs.push_back({model::qubit_site(i), 0, -1, 0});
    reqs.push_back({model::cavity_site(i), 1, -1, 0});
  }
  const auto v = evaluate(mps, ops, reqs);
  DensityProfile d;
  for (int i = 0; i < p.L; ++i) {
    d.n_q.push_back(v[2 * i]);
    d.n_r.push_back(v[2 * i + 1]);
  }
  return d;
}

double two_point(const Mps& mps, int x, const LocalOp& op_x, int y, const LocalOp& op_y) {
  require(x >= 0 && x < y && y < mps.num_sites(), "two_point: need 0 <= x < y < sites");
  return evaluate(mps, {op_x, op_y}, {{x, 0, y, 1}})[0];
}

CorrelationTable correlation_table(const Mps& mps, const model::ModelParams& p, const Window& w) {
  require(mps.num_sites() == p.num_sites(), "correlation_table: state and parameters disagree on the chain length");
  check_window(p, w);
  // 0 s+  1 s-  2 n_q  3 a^dag  4 a  5 n_r  6 n_r^2
  const std::vector<LocalOp> ops{model::sigma_plus(),      model::sigma_minus(),   model::qubit_number(),
                                 model::create(p.n_max),   model::annihilate(p.n_max), model::photon_number(p.n_max),
                                 squared(model::photon_number(p.n_max))};
  struct Slot {
    int table;  // 0 gamma_q, 1 gamma_r, 2 nn_q, 3 nn_r
    int r;
  };
  std::vector<Request> reqs;
  std::vector<Slot> slots;
  auto add = [&](int table, int r, Request q) {
    reqs.push_back(q);
    slots.push_back({table, r});
  };
  for (int r = 0; r <= w.r_max; ++r) {
    for (auto [i, j] : cell_pairs(p, w, r)) {
      const int qi = model::qubit_site(i), qj = model::qubit_site(j);
      const int ci = model::cavity_site(i), cj = model::cavity_site(j);
      if (i == j) {
        add(0, r, {qi, 2, -1, 0});
        add(1, r, {ci, 5, -1, 0});
        add(2, r, {qi, 2, -1, 0});  // n_q^2 = n_q
        add(3, r, {ci, 6, -1, 0});
      } else if (i < j) {
        add(0, r, {qi, 0, qj, 1});
        add(1, r, {ci, 3, cj, 4});
        add(2, r, {qi, 2, qj, 2});
        add(3, r, {ci, 5, cj, 5});
      } else {
        add(0, r, {qj, 1, qi, 0});
        add(1, r, {cj, 4, ci, 3});
        add(2, r, {qj, 2, qi, 2});
        add(3, r, {cj, 5, ci, 5});
      }
    }
  }
  const auto v = evaluate(mps, ops, reqs);
  CorrelationTable t;
  t.window = w;
  const auto len = static_cast<std::size_t>(w.r_max + 1);
  std::vector<std::vector<double>> acc(4, std::vector<double>(len, 0.0));
  t.pairs.assign(len, 0);
  for (std::size_t k = 0; k < v.size(); ++k) acc[slots[k].table][slots[k].r] += v[k];
  for (int r = 0; r <= w.r_max; ++r) t.pairs[r] = static_cast<int>(cell_pairs(p, w, r).size());
  for (auto& a : acc)
    for (std::size_t r = 0; r < len; ++r) a[r] /= t.pairs[r];
  t.gamma_q = acc[0];
  t.gamma_r = acc[1];
  t.nn_q = acc[2];
  t.nn_r = acc[3];
  return t;
}

std::vector<double> single_particle_density_matrix(const Mps& mps, const model::ModelParams& p, Species s,
                                                   const Window& w) {
  return correlation_table(mps, p, w).gamma(s);
}

double structure_factor(const Mps& mps, const model::ModelParams& p, Species s, const Window& w) {
  require(mps.center == 0, "structure_factor: state must have its center at site 0");
  require(mps.charge > 0, "structure_factor: empty sector");
  require(w.lo >= 0 && w.hi < p.L && w.lo <= w.hi, "structure_factor: window outside the chain");
  const LocalOp n = s == Species::qubit ? model::qubit_number() : model::photon_number(p.n_max);
  const LocalOp n2 = squared(n);
  const double norm = mps.sites[0].squared_norm();
  // T0, T1, T2 carry M^0, M^1, M^2 with M = sum_i (-1)^(i - lo) n_i.
  Transfer t0 = Transfer::identity_left(mps.bond(0)), t1, t2;
  const int last = species_site(s, w.hi);
  for (int a = 0; a <= last; ++a) {
    const int cell = model::cell_of(a);
    const bool in = cell >= w.lo && species_site(s, cell) == a;
    if (!in) {
      t0 = transfer_left(t0, mps.sites[a]);
      if (!t1.blocks.empty()) t1 = transfer_left(t1, mps.sites[a]);
      if (!t2.blocks.empty()) t2 = transfer_left(t2, mps.sites[a]);
      continue;
    }
    const double sign = ((cell - w.lo) % 2 == 0) ? 1.0 : -1.0;
    Transfer n2_next;
    if (!t2.blocks.empty()) axpy(n2_next, transfer_left(t2, mps.sites[a]), 1.0);
    if (!t1.blocks.empty()) axpy(n2_next, transfer_left(t1, mps.sites[a], &n), 2.0 * sign);
    axpy(n2_next, transfer_left(t0, mps.sites[a], &n2), 1.0);
    Transfer n1_next;
    if (!t1.blocks.empty()) axpy(n1_next, transfer_left(t1, mps.sites[a]), 1.0);
    axpy(n1_next, transfer_left(t0, mps.sites[a], &n), sign);
    t0 = transfer_left(t0, mps.sites[a]);
    t1 = std::move(n1_next);
    t2 = std::move(n2_next);
  }
  const double n_tot = mps.charge;
  return t2.trace() / norm / (n_tot * n_tot);
}

DensityProfile local_densities(const ed::SectorBasis& basis, const linalg::Vector& v) {
  const auto& p = basis.params();
  DensityProfile d;
  for (int i = 0; i < p.L; ++i) {
    d.n_q.push_back(ed::one_point(basis, v, model::qubit_site(i), model::qubit_number()));
    d.n_r.push_back(ed::one_point(basis, v, model::cavity_site(i), model::photon_number(p.n_max)));
  }
  return d;
}

CorrelationTable correlation_table(const ed::SectorBasis& basis, const linalg::Vector& v, const Window& w) {
  const auto& p = basis.params();
  check_window(p, w);
  const LocalOp sp = model::sigma_plus(), sm = model::sigma_minus(), nq = model::qubit_number();
  const LocalOp ad = model::create(p.n_max), an = model::annihilate(p.n_max), nr = model::photon_number(p.n_max);
  CorrelationTable t;
  t.window = w;
  for (int r = 0; r <= w.r_max; ++r) {
    double g_q = 0, g_r = 0, n_q = 0, n_r = 0;
    const auto pairs = cell_pairs(p, w, r);
    for (auto [i, j] : pairs) {
      const int qi = model::qubit_site(i), qj = model::qubit_site(j);
      const int ci = model::cavity_site(i), cj = model::cavity_site(j);
      if (i == j) {
        g_q += ed::one_point(basis, v, qi, nq);
        n_q += ed::one_point(basis, v, qi, nq);
        g_r += ed::one_point(basis, v, ci, nr);
        n_r += ed::one_point(basis, v, ci, squared(nr));
      } else {
        g_q += ed::two_point(basis, v, qi, sp, qj, sm);
        g_r += ed::two_point(basis, v, ci, ad, cj, an);
        n_q += ed::two_point(basis, v, qi, nq, qj, nq);
        n_r += ed::two_point(basis, v, ci, nr, cj, nr);
      }
    }
    const double c = static_cast<double>(pairs.size());
    t.gamma_q.push_back(g_q / c);
    t.gamma_r.push_back(g_r / c);
    t.nn_q.push_back(n_q / c);
    t.nn_r.push_back(n_r / c);
    t.pairs.push_back(static_cast<int>(pairs.size()));
  }
  return t;
}

double structure_factor(const ed::SectorBasis& basis, const linalg::Vector& v, Species s, const Window& w) {
  const auto& p = basis.params();
  require(w.lo >= 0 && w.hi < p.L && w.lo <= w.hi, "structure_factor: window outside the chain");
  require(basis.charge() > 0, "structure_factor: empty sector");
  const LocalOp n = s == Species::qubit ? model::qubit_number() : model::photon_number(p.n_max);
  double acc = 0.0;
  for (int i = w.lo; i <= w.hi; ++i)
    for (int j = w.lo; j <= w.hi; ++j) {
      const double sign = (std::abs(i - j) % 2 == 0) ? 1.0 : -1.0;
      const int a = species_site(s, i), b = species_site(s, j);
      acc += sign * (i == j ? ed::one_point(basis, v, a, squared(n)) : ed::two_point(basis, v, a, n, b, n));
    }
  const double n_tot = basis.charge();
  return acc / (n_tot * n_tot);
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationTable& t) {
  std::ostringstream out;
  out.precision(17);
  out << "species,r,value,window_lo,window_hi\n";
  const std::pair<const char*, const std::vector<double>*> cols[] = {
      {"gamma_q", &t.gamma_q}, {"gamma_r", &t.gamma_r}, {"nn_q", &t.nn_q}, {"nn_r", &t.nn_r}};
  for (const auto& [name, v] : cols)
    for (std::size_t r = 0; r < v->size(); ++r)
      out << name << ',' << r << ',' << (*v)[r] << ',' << t.window.lo << ',' << t.window.hi << '\n';
  records::atomic_write(path, out.str());
}

CorrelationTable read_correlation_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  require(line == "species,r,value,window_lo,window_hi", "correlation CSV: unexpected header in " + path.string(),
          ErrorCode::io);
  CorrelationTable t;
  std::map<std::string, std::vector<double>*> dst{
      {"gamma_q", &t.gamma_q}, {"gamma_r", &t.gamma_r}, {"nn_q", &t.nn_q}, {"nn_r", &t.nn_r}};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string species, field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    require(f.size() == 5 && dst.count(f[0]), "correlation CSV: bad row '" + line + "'", ErrorCode::io);
    auto& v = *dst[f[0]];
    const auto r = static_cast<std::size_t>(std::stoi(f[1]));
    if (v.size() <= r) v.resize(r + 1, 0.0);
    v[r] = std::stod(f[2]);
    t.window.lo = std::stoi(f[3]);
    t.window.hi = std::stoi(f[4]);
  }
  t.window.r_max = static_cast<int>(t.gamma_q.size()) - 1;
  return t;
}

}  // namespace mcjc::obs
