// Dense SPD linear algebra for covariance matrices.
//
// All routines are templated on the scalar type and operate on Eigen dense
// matrices. Points are stored one per row (n x d).

#ifndef KRIGCV_GPLINALG_HPP_
#define KRIGCV_GPLINALG_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "krigcv/covkernel.hpp"

namespace krigcv {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Raised when a Cholesky pivot is not strictly positive.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

/// Lower-triangular factor L of R = L L^T.
template <typename Scalar>
class CholFactor {
 public:
  CholFactor() = default;
  explicit CholFactor(Matrix<Scalar> lower) : lower_(std::move(lower)) {}

  const Matrix<Scalar>& lower() const { return lower_; }
  Eigen::Index size() const { return lower_.rows(); }

  auto view() const { return lower_.template triangularView<Eigen::Lower>(); }

 private:
  Matrix<Scalar> lower_;
};

namespace detail {

// Max-norm distance between row i of a and row j of b.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar row_distance(const Eigen::MatrixBase<DerivedA>& a, Eigen::Index i,
                                       const Eigen::MatrixBase<DerivedB>& b, Eigen::Index j) {
  typename DerivedA::Scalar m(0);
  for (Eigen::Index k = 0; k < a.cols(); ++k) m = std::max(m, std::abs(a(i, k) - b(j, k)));
  return m;
}

}  // namespace detail

/// Correlation matrix (sigma2 = 1, no nugget) between two point sets.
template <typename Scalar, typename DerivedA, typename DerivedB>
Matrix<Scalar> cross_correlation(const MaternKernel<Scalar>& kernel,
                                 const Eigen::MatrixBase<DerivedA>& a,
                                 const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("cross_correlation: dimension mismatch");
  Matrix<Scalar> out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out(i, j) = kernel.correlation(static_cast<Scalar>(detail::row_distance(a, i, b, j)));
  return out;
}

/// Noise-free covariance K_theta(a_i - b_j) between two point sets.
template <typename Scalar, typename DerivedA, typename DerivedB>
Matrix<Scalar> cross_cov(const MaternSpec<Scalar>& spec,
                         const Eigen::MatrixBase<DerivedA>& a,
                         const Eigen::MatrixBase<DerivedB>& b) {
  const MaternKernel<Scalar> kernel(spec);
  Matrix<Scalar> out = cross_correlation(kernel, a, b);
  out *= spec.sigma2;
  return out;
}

/// Symmetric correlation matrix of a point set, unit diagonal, no nugget.
/// Each unordered pair is evaluated once and mirrored.
template <typename Scalar, typename Derived>
Matrix<Scalar> correlation_matrix(const MaternKernel<Scalar>& kernel,
                                  const Eigen::MatrixBase<Derived>& points) {
  const Eigen::Index n = points.rows();
  Matrix<Scalar> c(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    c(j, j) = Scalar(1);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const Scalar v =
          kernel.correlation(static_cast<Scalar>(detail::row_distance(points, i, points, j)));
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

/// Covariance matrix R with R_ij = K(X_i - X_j) + delta 1{i=j}.
template <typename Scalar, typename Derived>
Matrix<Scalar> build_cov(const MaternSpec<Scalar>& spec,
                         const Eigen::MatrixBase<Derived>& points) {
  if (points.rows() == 0) throw std::invalid_argument("build_cov: empty design");
  const MaternKernel<Scalar> kernel(spec);
  Matrix<Scalar> r = correlation_matrix(kernel, points);
  r *= spec.sigma2;
  r.diagonal().setConstant(spec.sigma2 + spec.delta);
  return r;
}

/// Covariance matrix assembled from a precomputed correlation matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> cov_from_correlation(
    const Eigen::MatrixBase<Derived>& corr, typename Derived::Scalar sigma2,
    typename Derived::Scalar delta) {
  Matrix<typename Derived::Scalar> r = sigma2 * corr;
  r.diagonal().array() += delta;
  return r;
}

/// Cholesky factorization. Throws NotPositiveDefinite on breakdown; no
/// jitter is ever added.
template <typename Derived>
CholFactor<typename Derived::Scalar> cholesky(const Eigen::MatrixBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  if (r.rows() != r.cols()) throw std::invalid_argument("cholesky: matrix not square");
  Eigen::LLT<Matrix<Scalar>, Eigen::Lower> llt(r);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("cholesky: matrix is not positive definite");
  Matrix<Scalar> lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i)
    if (!(lower(i, i) > Scalar(0)) || !std::isfinite(static_cast<double>(lower(i, i))))
      throw NotPositiveDefinite("cholesky: non-positive pivot at index " + std::to_string(i));
  return CholFactor<Scalar>(std::move(lower));
}

/// log det R = 2 sum log L_ii.
template <typename Scalar>
Scalar logdet(const CholFactor<Scalar>& factor) {
  return Scalar(2) * factor.lower().diagonal().array().log().sum();
}

/// R^{-1} b by forward and back substitution. b may have several columns.
template <typename Scalar, typename Derived>
Matrix<Scalar> solve(const CholFactor<Scalar>& factor, const Eigen::MatrixBase<Derived>& b) {
  if (b.rows() != factor.size()) throw std::invalid_argument("solve: dimension mismatch");
  Matrix<Scalar> x = factor.view().solve(b);
  factor.lower().transpose().template triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

/// L^{-1} b (half solve); the squared norm of the result is b^T R^{-1} b.
template <typename Scalar, typename Derived>
Matrix<Scalar> solve_lower(const CholFactor<Scalar>& factor,
                           const Eigen::MatrixBase<Derived>& b) {
  if (b.rows() != factor.size()) throw std::invalid_argument("solve_lower: dimension mismatch");
  return factor.view().solve(b);
}

/// Explicit R^{-1} = L^{-T} L^{-1}, exactly symmetric.
template <typename Scalar>
Matrix<Scalar> inverse(const CholFactor<Scalar>& factor) {
  const Eigen::Index n = factor.size();
  const Matrix<Scalar> linv = factor.view().solve(Matrix<Scalar>::Identity(n, n));
  Matrix<Scalar> rinv = Matrix<Scalar>::Zero(n, n);
  rinv.template selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
  Matrix<Scalar> full = rinv.template selfadjointView<Eigen::Lower>();
  return full;
}

/// L z: a draw from N(0, R) when z is iid standard normal.
template <typename Scalar, typename Derived>
Vector<Scalar> sample_joint(const CholFactor<Scalar>& factor,
                            const Eigen::MatrixBase<Derived>& z) {
  if (z.size() != factor.size()) throw std::invalid_argument("sample_joint: |z| != n");
  return factor.view() * z;
}

}  // namespace krigcv

#endif  // KRIGCV_GPLINALG_HPP_
