#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "steinpairs/errors.hpp"

namespace steinpairs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A general d x d real matrix (Lambda and friends). Kept as a plain Eigen
// matrix; functions that need squareness check it on entry.
using SquareMatrix = Matrix;

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw InvalidArgument(std::string(what) + " must be a non-empty square matrix");
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + " has non-finite entries");
}

// Symmetric matrix whose stored entries are exactly mirrored.
//
// Construction accepts inputs whose asymmetry is at most `tol` (max-abs of
// M - M^t) and stores the symmetrized average.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Matrix& m, double tol = 1e-12) {
    require_square(m, "symmetric matrix");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol)
      throw Nonsymmetric("stored asymmetry " + std::to_string(asym) + " exceeds " + std::to_string(tol));
    m_ = 0.5 * (m + m.transpose());
  }

  static SymMatrix identity(int d) { return SymMatrix(Matrix::Identity(d, d)); }

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix m_;
};

struct MatrixNorms {
  double maxabs = 0.0;       // max_{ij} |M_ij|
  double induced_one = 0.0;  // max column absolute sum
};

inline MatrixNorms norms(const Matrix& m) {
  if (m.size() == 0) return {};
  return {m.cwiseAbs().maxCoeff(), m.cwiseAbs().colwise().sum().maxCoeff()};
}

struct PsdOptions {
  // Eigenvalues in [-tol_scale * trace/d, 0) are clamped to zero.
  double tol_scale = 1e-10;
};

namespace detail {

inline double eig_tolerance(const Matrix& s, double tol_scale) {
  const double scale = std::max(std::abs(s.trace()) / static_cast<double>(s.rows()),
                                std::numeric_limits<double>::min());
  return tol_scale * scale;
}

inline Eigen::SelfAdjointEigenSolver<Matrix> eigensolve(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix());
  if (es.info() != Eigen::Success) throw Singular("symmetric eigendecomposition failed");
  return es;
}

}  // namespace detail

// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const SymMatrix& s) { return detail::eigensolve(s).eigenvalues().minCoeff(); }

inline void require_psd(const SymMatrix& s, PsdOptions opt = {}) {
  const double tol = detail::eig_tolerance(s.matrix(), opt.tol_scale);
  const double lo = min_eigenvalue(s);
  if (lo < -tol) throw NotPSD("eigenvalue " + std::to_string(lo) + " below -" + std::to_string(tol));
}

// Unique symmetric nonnegative definite square root.
inline SymMatrix psd_sqrt(const SymMatrix& s, PsdOptions opt = {}) {
  const auto es = detail::eigensolve(s);
  const double tol = detail::eig_tolerance(s.matrix(), opt.tol_scale);
  Vector ev = es.eigenvalues();
  if (ev.minCoeff() < -tol)
    throw NotPSD("eigenvalue " + std::to_string(ev.minCoeff()) + " below -" + std::to_string(tol));
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  const Matrix& q = es.eigenvectors();
  const Matrix r = q * ev.asDiagonal() * q.transpose();
  return SymMatrix(0.5 * (r + r.transpose()), std::numeric_limits<double>::infinity());
}

// Inverse of the square root of a positive definite matrix.
inline SymMatrix inverse_sqrt(const SymMatrix& s, double cond_max = 1e12) {
  const auto es = detail::eigensolve(s);
  const Vector& ev = es.eigenvalues();
  if (ev.minCoeff() <= ev.maxCoeff() / cond_max || ev.maxCoeff() <= 0.0)
    throw SingularSigma("covariance matrix is not positive definite (min eigenvalue " +
                        std::to_string(ev.minCoeff()) + ")");
  const Matrix& q = es.eigenvectors();
  const Matrix r = q * ev.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  return SymMatrix(0.5 * (r + r.transpose()), std::numeric_limits<double>::infinity());
}

// Partial-pivot LU inverse. Throws Singular when the reciprocal condition
// estimate falls below 1/cond_max.
inline SquareMatrix invert(const SquareMatrix& m, double cond_max = 1e12) {
  require_square(m, "matrix to invert");
  Eigen::PartialPivLU<Matrix> lu(m);
  const Matrix& packed = lu.matrixLU();
  if ((packed.diagonal().array() == 0.0).any()) throw Singular("zero pivot");
  const double rcond = lu.rcond();
  if (!(rcond >= 1.0 / cond_max))
    throw Singular("reciprocal condition estimate " + std::to_string(rcond) + " below 1/" +
                   std::to_string(cond_max));
  return lu.inverse();
}

// Sigma together with the derived quantities every bound needs.
class CovarianceModel {
 public:
  explicit CovarianceModel(SymMatrix sigma)
      : sigma_(std::move(sigma)), sqrt_(psd_sqrt(sigma_)), norms_(steinpairs::norms(sigma_.matrix())) {
    try {
      inv_sqrt_ = steinpairs::inverse_sqrt(sigma_);
    } catch (const SingularSigma&) {
      // singular targets are allowed; only standardization needs the inverse
    }
  }

  const SymMatrix& sigma() const noexcept { return sigma_; }
  const SymMatrix& sqrt() const noexcept { return sqrt_; }
  const MatrixNorms& norms() const noexcept { return norms_; }
  int dim() const noexcept { return sigma_.dim(); }

  bool full_rank() const noexcept { return inv_sqrt_.has_value(); }

  // Throws SingularSigma for rank-deficient Sigma.
  const SymMatrix& inverse_sqrt() const {
    if (!inv_sqrt_) throw SingularSigma("covariance matrix has no inverse square root");
    return *inv_sqrt_;
  }

 private:
  SymMatrix sigma_;
  SymMatrix sqrt_;
  MatrixNorms norms_;
  std::optional<SymMatrix> inv_sqrt_;
};

}  // namespace steinpairs
