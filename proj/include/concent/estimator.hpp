// Sample covariance and sample spectrum from observed data.
#pragma once

#include <Eigen/Dense>

#include <stdexcept>

#include "concent/linalg.hpp"
#include "concent/types.hpp"

namespace concent {

/// `centered` subtracts the empirical mean (population convention, divide by
/// n, not n-1). Default is the mean-zero form (1/n) X^T X.
struct CovarianceOptions {
  bool centered = false;
};

/// Sample covariance of an n x p data matrix (rows = samples).
///
/// Uncentered: (1/n) X^T X. Centered: (1/n) X^T X - (1/n^2)(X^T 1)(X^T 1)^T.
/// Both forms are assembled from self-adjoint rank updates, so the result is
/// symmetric bit-for-bit.
template <class Derived>
MatrixX<typename Derived::Scalar> sample_covariance(
    const Eigen::MatrixBase<Derived>& data, CovarianceOptions opts = {}) {
  using Scalar = typename Derived::Scalar;
  const Index n = data.rows();
  const Index p = data.cols();
  if (n < 1 || p < 1)
    throw std::invalid_argument("sample_covariance: need n >= 1 and p >= 1");
  if (opts.centered && n < 2)
    throw std::invalid_argument("sample_covariance: centering needs n >= 2");
  if (!data.derived().allFinite())
    throw std::invalid_argument("sample_covariance: non-finite entry");

  MatrixX<Scalar> w = MatrixX<Scalar>::Zero(p, p);
  w.template selfadjointView<Eigen::Lower>().rankUpdate(
      data.derived().transpose(), Scalar(1) / Scalar(n));
  if (opts.centered) {
    const VectorX<Scalar> col_sum = data.derived().colwise().sum();
    w.template selfadjointView<Eigen::Lower>().rankUpdate(
        col_sum, Scalar(-1) / (Scalar(n) * Scalar(n)));
  }
  w = w.template selfadjointView<Eigen::Lower>();
  return w;
}

/// Spectrum of the sample covariance, clamped and sorted via
/// validate_spectrum. For full-rank uncentered data this has exactly
/// max(0, p - n) zero entries.
template <class Derived>
Spectrum_<typename Derived::Scalar> sample_spectrum(
    const Eigen::MatrixBase<Derived>& data, CovarianceOptions opts = {}) {
  return validate_spectrum(
      detail::sym_eigenvalues(sample_covariance(data, opts)));
}

}  // namespace concent
