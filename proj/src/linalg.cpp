#include "mcjc/linalg.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mcjc/error.hpp"

namespace mcjc::linalg {

namespace {

void fix_sign(Eigen::Ref<Vector> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

void orthogonalize(Vector& w, const std::vector<Vector>& against) {
  for (const auto& q : against) w.noalias() -= q.dot(w) * q;
}

}  // namespace

EigenDecomposition sym_eig(const Matrix& a) {
  require(a.rows() == a.cols(), "sym_eig: matrix is not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, "sym_eig: matrix is not symmetric");
  if (a.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) fail(ErrorCode::convergence, "sym_eig: eigensolver failed");
  EigenDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index k = 0; k < out.vectors.cols(); ++k) {
    Vector col = out.vectors.col(k);
    fix_sign(col);
    out.vectors.col(k) = col;
  }
  return out;
}

SvdResult svd(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) {
    return {Matrix(a.rows(), 0), Vector(0), Matrix(a.cols(), 0)};
  }
  Eigen::BDCSVD<Eigen::MatrixXd> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

LanczosResult lanczos_lowest(const MatVec& op, std::size_t dim, const Vector& start,
                             const LanczosOptions& opts, const std::vector<Vector>& deflate) {
  require(dim > 0, "lanczos_lowest: empty space", ErrorCode::dimension);
  require(static_cast<std::size_t>(start.size()) == dim, "lanczos_lowest: start vector has wrong size");
  require(deflate.size() < dim, "lanczos_lowest: deflation space fills the whole space", ErrorCode::dimension);

  Vector v = start;
  orthogonalize(v, deflate);
  if (v.norm() < 1e-10) {
    v = seeded_vector(dim, 0x5eed);
    orthogonalize(v, deflate);
  }
  v.normalize();

  LanczosResult result;
  double previous = std::numeric_limits<double>::infinity();
  const int krylov_cap = std::max(2, std::min<int>(opts.max_krylov, static_cast<int>(dim - deflate.size())));
  Vector w(dim);

  while (true) {
    std::vector<Vector> basis;
    std::vector<double> alpha, beta;
    basis.push_back(v);
    Eigen::VectorXd ritz_coeffs;
    double theta = 0.0;
    bool invariant = false;

    for (int k = 0; k < krylov_cap; ++k) {
      op(std::span<const double>(basis[k].data(), dim), std::span<double>(w.data(), dim));
      ++result.iterations;
      const double a = basis[k].dot(w);
      alpha.push_back(a);
      // Full reorthogonalization, twice is enough.
      for (int pass = 0; pass < 2; ++pass) {
        orthogonalize(w, basis);
        orthogonalize(w, deflate);
      }
      const double b = w.norm();

      const auto m = static_cast<Eigen::Index>(alpha.size());
      Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
      Eigen::VectorXd sub(std::max<Eigen::Index>(m - 1, 0));
      for (Eigen::Index i = 0; i + 1 < m; ++i) sub[i] = beta[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      theta = tri.eigenvalues()[0];
      ritz_coeffs = tri.eigenvectors().col(0);

      const double estimate = b * std::abs(ritz_coeffs[m - 1]);
      const double change = std::abs(theta - previous) / std::max(1.0, std::abs(theta));
      previous = theta;
      const double scale = std::max(1.0, std::abs(theta));
      invariant = b < 1e-13 * std::max(1.0, std::abs(a));
      const bool small = estimate <= 0.5 * opts.tol * scale && change <= opts.eig_change_tol;
      if (invariant || small || result.iterations >= opts.max_iter || k + 1 == krylov_cap) break;
      beta.push_back(b);
      basis.push_back(w / b);
    }

    Vector x = Vector::Zero(dim);
    for (std::size_t j = 0; j < basis.size(); ++j) x.noalias() += ritz_coeffs[static_cast<Eigen::Index>(j)] * basis[j];
    orthogonalize(x, deflate);
    x.normalize();

    op(std::span<const double>(x.data(), dim), std::span<double>(w.data(), dim));
    ++result.iterations;
    orthogonalize(w, deflate);
    const double rayleigh = x.dot(w);
    const double residual = (w - rayleigh * x).norm();

    result.value = rayleigh;
    result.vector = std::move(x);
    result.residual = residual;
    const double scale = std::max(1.0, std::abs(rayleigh));
    if (residual <= opts.tol * scale || invariant) {
      result.converged = residual <= opts.tol * scale;
      return result;
    }
    if (result.iterations >= opts.max_iter) return result;
    v = result.vector;
    previous = rayleigh;
  }
}

LeastSquares least_squares(const Matrix& x, const Vector& y) {
  require(x.rows() == y.size(), "least_squares: design matrix and data disagree in length");
  require(x.rows() >= x.cols() && x.cols() > 0, "least_squares: underdetermined system");
  const Eigen::MatrixXd xd = x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xd);
  require(qr.rank() == x.cols(), "least_squares: degenerate design matrix", ErrorCode::dimension);

  LeastSquares out;
  out.coeffs = qr.solve(y);
  const Vector resid = y - xd * out.coeffs;
  const double rss = resid.squaredNorm();
  const auto n = x.rows();
  const auto p = x.cols();
  out.rms_residual = std::sqrt(rss / static_cast<double>(n));
  const double tss = (y.array() - y.mean()).square().sum();
  out.r_squared = tss > 0 ? 1.0 - rss / tss : (rss <= 1e-30 ? 1.0 : 0.0);
  out.std_errors = Vector::Zero(p);
  if (n > p) {
    const double sigma2 = rss / static_cast<double>(n - p);
    const Eigen::MatrixXd cov = (xd.transpose() * xd).inverse() * sigma2;
    out.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return out;
}

Vector seeded_vector(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Vector v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    v[static_cast<Eigen::Index>(i)] = 2.0 * u - 1.0;
  }
  const double n = v.norm();
  if (n > 0) v /= n;
  return v;
}

}  // namespace mcjc::linalg
