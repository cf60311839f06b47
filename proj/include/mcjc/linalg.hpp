#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mcjc::linalg {

// Row-major dense storage. All states and operators of the model are real
// in the product basis, so there is no complex path.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]
};

/// Symmetric eigendecomposition. Each eigenvector is sign-fixed so that its
/// first entry with magnitude above 1e-12 is positive.
EigenDecomposition sym_eig(const Matrix& a);

struct SvdResult {
  Matrix u;
  Vector s;  // nonnegative, descending
  Matrix v;  // a = u * diag(s) * v^T
};

SvdResult svd(const Matrix& a);

/// y = H x for a symmetric operator given only through its action.
using MatVec = std::function<void(std::span<const double> x, std::span<double> y)>;

struct LanczosOptions {
  double tol = 1e-10;             // on the residual norm ||Hv - lambda v||
  double eig_change_tol = 1e-12;  // on |lambda_k - lambda_{k-1}| / max(1, |lambda|)
  int max_iter = 500;             // total matrix-vector products
  int max_krylov = 100;           // restart length
};

struct LanczosResult {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Lowest eigenpair of a symmetric operator by Lanczos with full
/// reorthogonalization and explicit restarts on the current Ritz vector.
/// `deflate` lists orthonormal vectors whose span is projected out, which is
/// how the second eigenvalue is obtained.
LanczosResult lanczos_lowest(const MatVec& op, std::size_t dim, const Vector& start,
                             const LanczosOptions& opts = {},
                             const std::vector<Vector>& deflate = {});

struct LeastSquares {
  Vector coeffs;
  Vector std_errors;  // plain OLS standard errors, zero when dof <= 0
  double rms_residual = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares for design matrix `x` (rows = observations).
LeastSquares least_squares(const Matrix& x, const Vector& y);

/// Deterministic start vector with entries in [-1, 1) from a fixed-seed
/// 64-bit Mersenne twister, normalized. Bit-stable across platforms.
Vector seeded_vector(std::size_t dim, std::uint64_t seed);

}  // namespace mcjc::linalg
