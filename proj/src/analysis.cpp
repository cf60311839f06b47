#include "mcjc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcjc/error.hpp"
#include "mcjc/linalg.hpp"

namespace mcjc::analysis {

using linalg::Matrix;
using linalg::Vector;

std::string to_string(FitKind k) {
  switch (k) {
    case FitKind::exponential: return "exponential";
    case FitKind::power_law: return "power_law";
    case FitKind::linear_in_inverse_L: return "linear_in_inverse_L";
  }
  return "?";
}

double FitResult::value(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  fail(ErrorCode::invalid_argument, "FitResult: no parameter '" + name + "'");
}

double FitResult::error(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return errors[i];
  fail(ErrorCode::invalid_argument, "FitResult: no parameter '" + name + "'");
}

nlohmann::json to_json(const FitResult& f) {
  nlohmann::json params = nlohmann::json::object(), errors = nlohmann::json::object();
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    params[f.names[i]] = f.values[i];
    errors[f.names[i]] = f.errors[i];
  }
  return {{"kind", to_string(f.kind)}, {"params", params}, {"std_errors", errors}, {"x_min", f.x_min},
          {"x_max", f.x_max},          {"n_points", f.n_points}, {"rms", f.rms}, {"r2", f.r2}};
}

FitResult fit_from_json(const nlohmann::json& j) {
  FitResult f;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "exponential") f.kind = FitKind::exponential;
  else if (kind == "power_law") f.kind = FitKind::power_law;
  else if (kind == "linear_in_inverse_L") f.kind = FitKind::linear_in_inverse_L;
  else fail(ErrorCode::config, "FitResult: unknown kind '" + kind + "'");
  switch (f.kind) {
    case FitKind::exponential: f.names = {"y", "A", "xi"}; break;
    case FitKind::power_law: f.names = {"amplitude", "K"}; break;
    case FitKind::linear_in_inverse_L: f.names = {"intercept", "slope"}; break;
  }
  for (const auto& name : f.names) {
    f.values.push_back(j.at("params").at(name).get<double>());
    f.errors.push_back(j.at("std_errors").at(name).get<double>());
  }
  f.x_min = j.at("x_min").get<double>();
  f.x_max = j.at("x_max").get<double>();
  f.n_points = j.at("n_points").get<int>();
  f.rms = j.at("rms").get<double>();
  f.r2 = j.at("r2").get<double>();
  return f;
}

namespace {

constexpr int kMinPoints = 6;

struct Points {
  std::vector<double> r, v;
};

Points window_points(const std::vector<double>& values, FitWindow w) {
  const int last = static_cast<int>(values.size()) - 1;
  const int hi = w.r_max < 0 ? last : std::min(w.r_max, last);
  require(w.r_min >= 0, "fit: r_min must be nonnegative");
  Points p;
  for (int r = w.r_min; r <= hi; ++r) {
    p.r.push_back(r);
    p.v.push_back(values[r]);
  }
  require(static_cast<int>(p.r.size()) >= kMinPoints,
          "fit: need at least " + std::to_string(kMinPoints) + " separations in [" + std::to_string(w.r_min) + ", " +
              std::to_string(hi) + "], have " + std::to_string(p.r.size()));
  return p;
}

/// Linear solve for (y, A) at fixed xi; returns the residual sum of squares.
double separable_rss(const Points& p, double xi, double& y, double& a) {
  const auto n = static_cast<Eigen::Index>(p.r.size());
  Matrix x(n, 2);
  Vector b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::exp(-p.r[i] / xi);
    b[i] = p.v[i];
  }
  const Vector c = x.colPivHouseholderQr().solve(b);
  y = c[0];
  a = c[1];
  return (x * c - b).squaredNorm();
}

}  // namespace

FitResult fit_exponential(const std::vector<double>& values, FitWindow w) {
  const Points p = window_points(values, w);
  for (double v : p.v) require(std::isfinite(v), "fit_exponential: non-finite data");
  // Scan |xi| on a log grid for both decaying and growing exponentials.
  constexpr int kGrid = 400;
  constexpr double kXiMin = 0.05, kXiMax = 1e5;
  double best_rss = std::numeric_limits<double>::infinity();
  int best_i = -1, best_sign = 1;
  std::vector<double> grid(kGrid);
  for (int i = 0; i < kGrid; ++i) grid[i] = kXiMin * std::pow(kXiMax / kXiMin, static_cast<double>(i) / (kGrid - 1));
  for (int sign : {1, -1}) {
    for (int i = 0; i < kGrid; ++i) {
      double y, a;
      const double rss = separable_rss(p, sign * grid[i], y, a);
      if (rss < best_rss) {
        best_rss = rss;
        best_i = i;
        best_sign = sign;
      }
    }
  }
  if (best_sign < 0)
    fail(ErrorCode::convergence, "fit_exponential: best fit has negative correlation length (growing data)");
  if (best_i == kGrid - 1)
    fail(ErrorCode::convergence, "fit_exponential: no decay resolved (xi beyond " + std::to_string(kXiMax) + ")");

  // Golden-section refinement in log(xi) between the grid neighbours.
  double lo = std::log(grid[std::max(0, best_i - 1)]), hi = std::log(grid[std::min(kGrid - 1, best_i + 1)]);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double y, a;
  auto f = [&](double t) { return separable_rss(p, std::exp(t), y, a); };
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double xi = std::exp(0.5 * (lo + hi));
  const double rss = separable_rss(p, xi, y, a);
  if (!(xi > 0) || !std::isfinite(rss)) fail(ErrorCode::convergence, "fit_exponential: refinement failed");

  const auto n = static_cast<Eigen::Index>(p.r.size());
  Matrix jac(n, 3);
  double mean = 0.0, tss = 0.0;
  for (double v : p.v) mean += v;
  mean /= static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = std::exp(-p.r[i] / xi);
    jac(i, 0) = 1.0;
    jac(i, 1) = e;
    jac(i, 2) = a * p.r[i] / (xi * xi) * e;
    tss += (p.v[i] - mean) * (p.v[i] - mean);
  }
  Vector se = Vector::Zero(3);
  if (n > 3) {
    const Matrix jtj = jac.transpose() * jac;
    const Eigen::FullPivLU<Matrix> lu(jtj);
    if (lu.isInvertible()) {
      const Matrix cov = lu.inverse() * (rss / static_cast<double>(n - 3));
      for (int k = 0; k < 3; ++k) se[k] = std::sqrt(std::max(0.0, cov(k, k)));
    } else {
      se.setConstant(std::numeric_limits<double>::infinity());
    }
  }
  FitResult out;
  out.kind = FitKind::exponential;
  out.names = {"y", "A", "xi"};
  out.values = {y, a, xi};
  out.errors = {se[0], se[1], se[2]};
  out.x_min = p.r.front();
  out.x_max = p.r.back();
  out.n_points = static_cast<int>(n);
  out.rms = std::sqrt(rss / static_cast<double>(n));
  out.r2 = tss > 0 ? 1.0 - rss / tss : 1.0;
  return out;
}

FitResult fit_luttinger(const std::vector<double>& values, FitWindow w) {
  if (w.r_min < 1) w.r_min = 1;
  const Points p = window_points(values, w);
  const auto n = static_cast<Eigen::Index>(p.r.size());
  Matrix x(n, 2);
  Vector b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(p.v[i] > 0, "fit_luttinger: Gamma(" + std::to_string(static_cast<int>(p.r[i])) +
                            ") <= 0, data is not a power law");
    x(i, 0) = 1.0;
    x(i, 1) = std::log(p.r[i]);
    b[i] = std::log(p.v[i]);
  }
  const auto ls = linalg::least_squares(x, b);
  FitResult out;
  out.kind = FitKind::power_law;
  out.names = {"amplitude", "K"};
  out.values = {std::exp(ls.coeffs[0]), -2.0 * ls.coeffs[1]};
  out.errors = {std::exp(ls.coeffs[0]) * ls.std_errors[0], 2.0 * ls.std_errors[1]};
  out.x_min = p.r.front();
  out.x_max = p.r.back();
  out.n_points = static_cast<int>(n);
  out.rms = ls.rms_residual;
  out.r2 = ls.r_squared;
  return out;
}

FitResult extrapolate_inverse_L(const std::vector<std::pair<int, double>>& values) {
  require(values.size() >= 3, "extrapolate_inverse_L: need at least 3 sizes");
  bool distinct = false;
  for (const auto& [L, v] : values) {
    require(L > 0, "extrapolate_inverse_L: sizes must be positive");
    require(std::isfinite(v), "extrapolate_inverse_L: non-finite value");
    distinct |= L != values.front().first;
  }
  require(distinct, "extrapolate_inverse_L: all sizes equal, slope undetermined");
  const auto n = static_cast<Eigen::Index>(values.size());
  Matrix x(n, 2);
  Vector b(n);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double inv = 1.0 / values[i].first;
    x(i, 0) = 1.0;
    x(i, 1) = inv;
    b[i] = values[i].second;
    lo = std::min(lo, inv);
    hi = std::max(hi, inv);
  }
  const auto ls = linalg::least_squares(x, b);
  FitResult out;
  out.kind = FitKind::linear_in_inverse_L;
  out.names = {"intercept", "slope"};
  out.values = {ls.coeffs[0], ls.coeffs[1]};
  out.errors = {ls.std_errors[0], ls.std_errors[1]};
  out.x_min = lo;
  out.x_max = hi;
  out.n_points = static_cast<int>(n);
  out.rms = ls.rms_residual;
  out.r2 = ls.r_squared;
  return out;
}

ChemicalPotentials chemical_potentials(const std::vector<SizeEnergies>& sizes) {
  require(sizes.size() >= 3, "chemical_potentials: need at least 3 system sizes");
  ChemicalPotentials c;
  std::vector<std::pair<int, double>> p, h;
  for (const auto& s : sizes) {
    if (!s.converged)
      fail(ErrorCode::convergence, "chemical_potentials: energy at L=" + std::to_string(s.L) + " not converged");
    c.L.push_back(s.L);
    c.mu_p.push_back(s.e_plus - s.e_zero);
    c.mu_h.push_back(s.e_zero - s.e_minus);
    p.emplace_back(s.L, c.mu_p.back());
    h.emplace_back(s.L, c.mu_h.back());
  }
  c.fit_p = extrapolate_inverse_L(p);
  c.fit_h = extrapolate_inverse_L(h);
  c.mu_p_inf = c.fit_p.value("intercept");
  c.mu_h_inf = c.fit_h.value("intercept");
  c.gap = c.mu_p_inf - c.mu_h_inf;
  return c;
}

std::vector<double> detect_critical_points(std::vector<std::pair<double, double>> sweep, double level) {
  require(sweep.size() >= 2, "detect_critical_points: need at least 2 grid points");
  std::sort(sweep.begin(), sweep.end());
  for (const auto& [x, k] : sweep) require(std::isfinite(x) && std::isfinite(k), "detect_critical_points: non-finite input");
  auto crossing = [&](int a, int b) -> double {
    const auto [xa, ka] = sweep[a];
    const auto [xb, kb] = sweep[b];
    if (ka == kb) return xa;
    return xa + (level - ka) * (xb - xa) / (kb - ka);
  };
  auto brackets = [&](int a, int b) {
    const double da = sweep[a].second - level, db = sweep[b].second - level;
    return (da <= 0 && db >= 0) || (da >= 0 && db <= 0);
  };
  const int n = static_cast<int>(sweep.size());
  std::vector<double> out;
  // Negative side uses pairs with both points at x <= 0, walking outward.
  int found = -1;
  for (int i = n - 1; i >= 1 && found < 0; --i)
    if (sweep[i].first <= 0 && brackets(i - 1, i)) found = i;
  require(found > 0, "detect_critical_points: no crossing for ln(g_l/g_r) < 0 on this grid");
  out.push_back(crossing(found - 1, found));
  found = -1;
  for (int i = 1; i < n && found < 0; ++i)
    if (sweep[i - 1].first >= 0 && brackets(i - 1, i)) found = i;
  require(found > 0, "detect_critical_points: no crossing for ln(g_l/g_r) > 0 on this grid");
  out.push_back(crossing(found - 1, found));
  for (double& x : out) x = std::exp(x);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CouplingPoint> fixed_sum_grid(double sum, double x_min, double x_max, int n) {
  require(sum > 0, "fixed_sum_grid: coupling sum must be positive");
  require(n >= 1, "fixed_sum_grid: need at least one point");
  require(n == 1 || x_max > x_min, "fixed_sum_grid: empty range");
  std::vector<CouplingPoint> out;
  for (int i = 0; i < n; ++i) {
    const double x = n == 1 ? x_min : x_min + (x_max - x_min) * i / (n - 1);
    const double e = std::exp(x);
    out.push_back({x, sum * e / (1.0 + e), sum / (1.0 + e)});
  }
  return out;
}

}  // namespace mcjc::analysis
