// Deterministic numerical kernel: seedable Gaussian matrices, symmetric
// eigendecomposition, and the spectrum-parameterized covariance product.
#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <type_traits>

#include "concent/rng.hpp"
#include "concent/types.hpp"

namespace concent {

/// n x p matrix of i.i.d. standard normal draws, filled in column-major
/// order. Advances `rng` by n*p draws.
template <class Scalar = double>
MatrixX<Scalar> gaussian_matrix(Index n, Index p, RngStream& rng) {
  static_assert(std::is_floating_point_v<Scalar>);
  if (n < 1 || p < 1)
    throw std::invalid_argument("gaussian_matrix: dimensions must be >= 1");
  if (n > std::numeric_limits<Index>::max() / p)
    throw std::invalid_argument("gaussian_matrix: dimension overflow");
  MatrixX<Scalar> out(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i)
      out(i, j) = static_cast<Scalar>(rng.next_normal());
  return out;
}

namespace detail {

template <class Scalar>
void check_symmetric(const MatrixX<Scalar>& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("eig_sym: matrix must be square, dim >= 1");
  if (!m.allFinite())
    throw std::invalid_argument("eig_sym: non-finite entry");
  const Scalar scale = m.cwiseAbs().maxCoeff();
  const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(1e-12) * scale)
    throw std::invalid_argument("eig_sym: matrix is not symmetric");
}

// Eigenvalues only (no vectors), sorted non-increasing, round-off intact.
template <class Derived>
VectorX<typename Derived::Scalar> sym_eigenvalues(
    const Eigen::MatrixBase<Derived>& m_expr) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> m = m_expr;
  check_symmetric(m);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(m,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eig_sym: eigensolver failed to converge");
  return solver.eigenvalues().reverse();
}

}  // namespace detail

/// Full eigendecomposition of a symmetric matrix, eigenvalues sorted
/// non-increasing with matching eigenvector columns.
///
/// The sign of each eigenvector is fixed by making its largest-magnitude
/// component positive (first such index on ties), so output is deterministic.
/// Throws NumericalError if the solver's iteration budget (30 implicit-shift
/// passes per eigenvalue) is exhausted.
template <class Derived>
EigenDecomposition_<typename Derived::Scalar> eig_sym(
    const Eigen::MatrixBase<Derived>& m_expr) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> m = m_expr;
  detail::check_symmetric(m);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(m);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eig_sym: eigensolver failed to converge");
  EigenDecomposition_<Scalar> out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < out.vectors.cols(); ++j) {
    Index pivot = 0;
    out.vectors.col(j).cwiseAbs().maxCoeff(&pivot);
    if (out.vectors(pivot, j) < Scalar(0)) out.vectors.col(j) *= Scalar(-1);
  }
  return out;
}

namespace detail {

// (1/n) diag(lambda)^{1/2} N^T N diag(lambda)^{1/2}, written as G^T G with
// G = N diag(sqrt(lambda/n)) and a rank update on the lower triangle, so the
// result is symmetric bit-for-bit.
template <class Scalar, class Derived>
MatrixX<Scalar> sandwich_of(const VectorX<Scalar>& lambda,
                            const Eigen::MatrixBase<Derived>& noise, Index n) {
  static_assert(std::is_same_v<Scalar, typename Derived::Scalar>);
  const Index p = lambda.size();
  if (noise.cols() != p)
    throw std::invalid_argument("sandwich: noise column count != spectrum length");
  if (n < 1 || noise.rows() != n)
    throw std::invalid_argument("sandwich: n must match the noise row count");
  const VectorX<Scalar> col_scale = (lambda / Scalar(n)).cwiseSqrt();
  const MatrixX<Scalar> g = noise.derived() * col_scale.asDiagonal();
  MatrixX<Scalar> w = MatrixX<Scalar>::Zero(p, p);
  w.template selfadjointView<Eigen::Lower>().rankUpdate(g.transpose());
  w = w.template selfadjointView<Eigen::Lower>();
  return w;
}

}  // namespace detail

/// Sample covariance of the synthetic data N diag(lambda)^{1/2}, i.e.
/// (1/n) lambda^{1/2} N^T N lambda^{1/2}. Exactly symmetric and PSD up to
/// round-off by construction.
template <class Scalar, class Derived>
MatrixX<Scalar> sandwich(const Spectrum_<Scalar>& lambda,
                         const Eigen::MatrixBase<Derived>& noise, Index n) {
  if (!noise.derived().allFinite())
    throw std::invalid_argument("sandwich: non-finite noise entry");
  return detail::sandwich_of(lambda.values(), noise, n);
}

}  // namespace concent
