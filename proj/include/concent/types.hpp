// Core domain types shared by the whole library: eigenvalue spectra,
// decompositions, run configuration and result records.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace concent {

using Index = Eigen::Index;

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Signals a numerical failure (eigensolver non-convergence, non-finite
/// iterates). Precondition violations throw std::invalid_argument instead.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class Derived>
class Spectrum_;  // fwd

template <class Derived>
Spectrum_<typename Derived::Scalar> validate_spectrum(
    const Eigen::MatrixBase<Derived>& raw);

/// A covariance spectrum: nonnegative eigenvalues sorted in non-increasing
/// order, length >= 1. Instances are immutable; the only way to build one
/// from raw data is validate_spectrum(), which enforces the invariants.
template <class Scalar>
class Spectrum_ {
 public:
  using Vector = VectorX<Scalar>;

  static Spectrum_ zeros(Index p) {
    if (p < 1) throw std::invalid_argument("Spectrum: length must be >= 1");
    return Spectrum_(Vector::Zero(p));
  }

  const Vector& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  Scalar operator[](Index i) const { return values_(i); }
  /// Largest eigenvalue; equals the spectral norm of diag(spectrum).
  Scalar max() const { return values_(0); }
  Scalar sum() const { return values_.sum(); }

  friend bool operator==(const Spectrum_& a, const Spectrum_& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  explicit Spectrum_(Vector v) : values_(std::move(v)) {}

  template <class Derived>
  friend Spectrum_<typename Derived::Scalar> validate_spectrum(
      const Eigen::MatrixBase<Derived>& raw);

  Vector values_;
};

using Spectrum = Spectrum_<double>;

/// Turns a raw eigenvalue vector into a valid Spectrum.
///
/// Entries within 1e-10 * max(raw) of zero (either sign) are snapped to
/// exactly 0, absorbing eigensolver round-off; anything more negative is
/// rejected as non-PSD input. The result is sorted non-increasing.
/// Idempotent: applying it twice gives the same spectrum.
template <class Derived>
Spectrum_<typename Derived::Scalar> validate_spectrum(
    const Eigen::MatrixBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  if (raw.rows() != 1 && raw.cols() != 1)
    throw std::invalid_argument("validate_spectrum: expected a vector");
  VectorX<Scalar> v = raw.reshaped();
  if (v.size() < 1)
    throw std::invalid_argument("validate_spectrum: empty input");
  if (!v.allFinite())
    throw std::invalid_argument("validate_spectrum: non-finite entry");

  const Scalar top = v.maxCoeff();
  const Scalar tol = top > Scalar(0) ? Scalar(1e-10) * top : Scalar(0);
  for (Index i = 0; i < v.size(); ++i) {
    if (v(i) < -tol) {
      std::ostringstream msg;
      msg << "validate_spectrum: entry " << i << " = " << v(i)
          << " below -1e-10 * max, input is not PSD";
      throw std::invalid_argument(msg.str());
    }
    if (std::abs(v(i)) <= tol) v(i) = Scalar(0);
  }
  std::sort(v.begin(), v.end(), std::greater<Scalar>());
  return Spectrum_<Scalar>(std::move(v));
}

/// Full symmetric eigendecomposition. Eigenvalues are sorted non-increasing
/// (they may carry tiny negative round-off before validate_spectrum clamps
/// them); column j of `vectors` pairs with eigenvalue j.
template <class Scalar>
struct EigenDecomposition_ {
  VectorX<Scalar> eigenvalues;
  MatrixX<Scalar> vectors;
};

using EigenDecomposition = EigenDecomposition_<double>;

enum class NormKind { L1, L2, LInf };

/// Parameters of the recovery loop. `sample_count` is the n that produced
/// the sample spectrum being corrected; the caller supplies it.
struct ConcentConfig {
  int loops = 10;
  int avg_k = 10;
  std::uint64_t seed = 0;
  NormKind norm = NormKind::L2;
  double ratio_floor = 1e-12;
  Index sample_count = 0;
};

template <class Scalar>
struct RecoveryResult_ {
  Spectrum_<Scalar> recovered;
  /// One entry per loop, recorded after the eigenvector correction;
  /// `recovered` equals the last entry.
  std::vector<Spectrum_<Scalar>> iterates;
  ConcentConfig config;
};

using RecoveryResult = RecoveryResult_<double>;

/// Summary statistics of repeated sample-spectrum draws from one true
/// spectrum. Deviations are normalized by the spectral norm of the true
/// spectrum (its largest entry); a zero reference yields zero deviations.
template <class Scalar>
struct ConcentrationReport_ {
  Index reps = 0;
  VectorX<Scalar> per_index_mean;
  VectorX<Scalar> per_index_std;
  /// Per rep: max_j |spectrum_j - mean_j| / spectral_norm_reference.
  VectorX<Scalar> max_abs_deviation;
  Scalar spectral_norm_reference = Scalar(0);
};

using ConcentrationReport = ConcentrationReport_<double>;

}  // namespace concent
