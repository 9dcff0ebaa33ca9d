// Error measures between rank-aligned spectra.
#pragma once

#include <optional>
#include <stdexcept>

#include "concent/types.hpp"

namespace concent {

template <class Scalar>
struct ErrorReport_ {
  Scalar l1{0};
  Scalar l2{0};
  Scalar linf{0};
  /// l2 / ||truth||_2; unset when the reference norm is zero.
  std::optional<Scalar> rel_l2;
  /// Signed deviations estimate_j - truth_j, index-aligned by rank.
  VectorX<Scalar> per_index;
};

using ErrorReport = ErrorReport_<double>;

/// Rank-by-rank comparison of two spectra of equal length (both are sorted,
/// so index j pairs the j-th largest eigenvalues).
template <class Scalar>
ErrorReport_<Scalar> spectrum_error(const Spectrum_<Scalar>& estimate,
                                    const Spectrum_<Scalar>& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("spectrum_error: length mismatch");
  ErrorReport_<Scalar> report;
  report.per_index = estimate.values() - truth.values();
  report.l1 = report.per_index.template lpNorm<1>();
  report.l2 = report.per_index.norm();
  report.linf = report.per_index.template lpNorm<Eigen::Infinity>();
  const Scalar ref = truth.values().norm();
  if (ref > Scalar(0)) report.rel_l2 = report.l2 / ref;
  return report;
}

}  // namespace concent
