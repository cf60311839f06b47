#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mcjc::analysis {

enum class FitKind { exponential, power_law, linear_in_inverse_L };
std::string to_string(FitKind k);

/// Parameters by name: exponential (y, A, xi), power_law (amplitude, K),
/// linear_in_inverse_L (intercept, slope).
struct FitResult {
  FitKind kind = FitKind::exponential;
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> errors;  // least-squares standard errors
  double x_min = 0.0, x_max = 0.0;  // fit window (r, or 1/L)
  int n_points = 0;
  double rms = 0.0;
  double r2 = 0.0;

  double value(const std::string& name) const;
  double error(const std::string& name) const;
};

nlohmann::json to_json(const FitResult& f);
FitResult fit_from_json(const nlohmann::json& j);

struct FitWindow {
  int r_min = 2;
  int r_max = -1;  // -1: L / 4, taken from the data length when L is unknown
};

/// Gamma(r) = y + A exp(-r / xi) on r in [r_min, r_max], by separable least
/// squares. values[r] is the correlator at separation r. Throws
/// invalid_argument for fewer than 6 points and convergence when the best
/// fit has xi <= 0 or no decay within the scanned range.
FitResult fit_exponential(const std::vector<double>& values, FitWindow w = {});

/// ln Gamma = ln amplitude - (K / 2) ln r. Throws invalid_argument on fewer
/// than 6 points or any Gamma <= 0 in the window.
FitResult fit_luttinger(const std::vector<double>& values, FitWindow w = {});

/// value = intercept + slope / L by ordinary least squares; >= 3 distinct sizes.
FitResult extrapolate_inverse_L(const std::vector<std::pair<int, double>>& values);

struct SizeEnergies {
  int L = 0;
  int N = 0;
  double e_minus = 0.0;  // E_L(N - 1)
  double e_zero = 0.0;   // E_L(N)
  double e_plus = 0.0;   // E_L(N + 1)
  bool converged = true;
};

struct ChemicalPotentials {
  std::vector<int> L;
  std::vector<double> mu_p, mu_h;
  FitResult fit_p, fit_h;
  double mu_p_inf = 0.0, mu_h_inf = 0.0;
  double gap = 0.0;
};

/// mu_p = E(N+1) - E(N), mu_h = E(N) - E(N-1) per size, both extrapolated in
/// 1/L. Throws invalid_argument for fewer than 3 sizes and convergence when
/// any input energy is flagged non-converged.
ChemicalPotentials chemical_potentials(const std::vector<SizeEnergies>& sizes);

/// Crossings of K0 = 1/2 by piecewise-linear interpolation, one on each
/// side of x = 0, searching outward from the center. Returns g_l / g_r
/// ratios exp(x*) in ascending order. Throws invalid_argument when a side
/// has no bracketing pair.
std::vector<double> detect_critical_points(std::vector<std::pair<double, double>> sweep, double level = 0.5);

struct CouplingPoint {
  double ln_ratio;
  double g_l;
  double g_r;
};

/// n points of ln(g_l / g_r) evenly spaced on [x_min, x_max] with g_l + g_r = sum.
std::vector<CouplingPoint> fixed_sum_grid(double sum, double x_min, double x_max, int n);

}  // namespace mcjc::analysis
