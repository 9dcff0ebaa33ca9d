// Spectrum recovery by randomized ratio de-biasing with eigenvector
// correction: simulate sample spectra from a candidate spectrum, fit the
// per-rank bias ratios in closed form, then redistribute the observed
// spectrum through the eigenvectors of a simulated covariance.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "concent/linalg.hpp"
#include "concent/rng.hpp"
#include "concent/types.hpp"

namespace concent {

/// Element-wise quotient of a simulated sample spectrum by the spectrum that
/// generated it; entries are nonnegative and finite.
template <class Scalar>
using RatioVector = VectorX<Scalar>;

namespace detail {

// v / max(v) with correctly-rounded divisions (top entry becomes exactly 1);
// all-zero input stays all-zero. Normalizing here makes every consumer
// scale-free: rescaling v cannot change the result when the rescaled entries
// are exact.
template <class Scalar>
VectorX<Scalar> max_normalized(const VectorX<Scalar>& v) {
  const Scalar m = v.maxCoeff();
  if (!(m > Scalar(0))) return VectorX<Scalar>::Zero(v.size());
  return v / m;
}

// Ratio vector on a normalized spectrum u (sorted, max(u) == 1, or all
// zero). Draws the noise matrix unconditionally so stream consumption does
// not depend on u.
template <class Scalar>
VectorX<Scalar> ratio_core(const VectorX<Scalar>& u, Index n, RngStream& rng,
                           Scalar floor) {
  const Index p = u.size();
  const MatrixX<Scalar> noise = gaussian_matrix<Scalar>(n, p, rng);
  if (!(u.maxCoeff() > Scalar(0))) return VectorX<Scalar>::Ones(p);
  const VectorX<Scalar> simulated =
      validate_spectrum(sym_eigenvalues(sandwich_of(u, noise, n))).values();
  VectorX<Scalar> ratio(p);
  for (Index j = 0; j < p; ++j)
    ratio(j) = u(j) <= floor ? Scalar(1) : simulated(j) / u(j);
  return ratio;
}

// d_j = base_j * (sum_k r_kj) / (sum_k r_kj^2); base_j where the
// denominator vanishes (only possible when every r_kj is zero).
template <class Scalar>
VectorX<Scalar> l2_fit_core(const VectorX<Scalar>& base,
                            const std::vector<VectorX<Scalar>>& ratios) {
  const Index p = base.size();
  VectorX<Scalar> lin = VectorX<Scalar>::Zero(p);
  VectorX<Scalar> quad = VectorX<Scalar>::Zero(p);
  for (const auto& r : ratios) {
    lin += r;
    quad.array() += r.array().square();
  }
  VectorX<Scalar> fit(p);
  for (Index j = 0; j < p; ++j)
    fit(j) = quad(j) == Scalar(0) ? base(j) : base(j) * (lin(j) / quad(j));
  return fit;
}

// diag(V diag(base) V^T) where V diagonalizes the covariance simulated from
// the normalized model spectrum. Row sums of V.^2 are 1, so the total mass
// of base is preserved up to round-off.
template <class Scalar>
VectorX<Scalar> correction_core(const VectorX<Scalar>& model_normalized,
                                const VectorX<Scalar>& base, Index n,
                                RngStream& rng) {
  const Index p = base.size();
  const MatrixX<Scalar> noise = gaussian_matrix<Scalar>(n, p, rng);
  const EigenDecomposition_<Scalar> decomp =
      eig_sym(sandwich_of(model_normalized, noise, n));
  return decomp.vectors.cwiseProduct(decomp.vectors) * base;
}

template <class Scalar>
void check_ratio_inputs(const Spectrum_<Scalar>& sample,
                        const std::vector<RatioVector<Scalar>>& ratios) {
  if (ratios.empty())
    throw std::invalid_argument("ratio fit: need at least one ratio vector");
  for (const auto& r : ratios) {
    if (r.size() != sample.size())
      throw std::invalid_argument("ratio fit: ratio length != spectrum length");
    if (!r.allFinite() || (r.array() < Scalar(0)).any())
      throw std::invalid_argument("ratio fit: ratios must be finite and >= 0");
  }
}

inline void check_config(const ConcentConfig& config) {
  if (config.loops < 1)
    throw std::invalid_argument("run: loops must be >= 1");
  if (config.avg_k < 1)
    throw std::invalid_argument("run: avg_k must be >= 1");
  if (!(config.ratio_floor > 0))
    throw std::invalid_argument("run: ratio_floor must be > 0");
  if (config.sample_count < 1)
    throw std::invalid_argument("run: sample_count must be >= 1");
  if (config.norm != NormKind::L2)
    throw std::invalid_argument(
        "run: only the L2 closed form is implemented; L1/LInf are reserved");
}

}  // namespace detail

/// Simulated-to-candidate spectrum ratios for one random draw.
///
/// Draws an n x p standard normal matrix, forms the simulated sample
/// spectrum of `lambda_est`, and divides it rank-by-rank by `lambda_est`.
/// Entries where lambda_est_j <= floor * max(lambda_est) are set to exactly
/// 1 (an all-zero estimate yields the all-ones ratio). The computation runs
/// on the max-normalized spectrum, so the result is scale-free.
template <class Scalar>
RatioVector<Scalar> ratio_vector(const Spectrum_<Scalar>& lambda_est, Index n,
                                 RngStream& rng,
                                 Scalar floor = Scalar(1e-12)) {
  if (n < 1) throw std::invalid_argument("ratio_vector: n must be >= 1");
  if (!(floor > Scalar(0)))
    throw std::invalid_argument("ratio_vector: floor must be > 0");
  return detail::ratio_core(detail::max_normalized(lambda_est.values()), n,
                            rng, floor);
}

/// Closed-form minimizer of sum_k sum_j (sample_j - r_kj d_j)^2 over d >= 0:
/// d_j = sample_j * (sum_k r_kj) / (sum_k r_kj^2). Ranks whose ratio squares
/// all vanish keep sample_j unchanged.
template <class Scalar>
Spectrum_<Scalar> l2_ratio_fit(const Spectrum_<Scalar>& sample,
                               const std::vector<RatioVector<Scalar>>& ratios) {
  detail::check_ratio_inputs(sample, ratios);
  return validate_spectrum(detail::l2_fit_core(sample.values(), ratios));
}

/// Averaged-ratio estimate d_j = sample_j * (sum_k r_kj) / K, kept for
/// comparison against the closed-form fit.
///
/// Note: this multiplies by the mean ratio as given; since r_kj approximates
/// sample_j / truth_j, dividing by the mean ratio would be the de-biasing
/// direction. l2_ratio_fit is the estimator actually used by run().
template <class Scalar>
Spectrum_<Scalar> naive_ratio_estimate(
    const Spectrum_<Scalar>& sample,
    const std::vector<RatioVector<Scalar>>& ratios) {
  detail::check_ratio_inputs(sample, ratios);
  VectorX<Scalar> lin = VectorX<Scalar>::Zero(sample.size());
  for (const auto& r : ratios) lin += r;
  const Scalar k = static_cast<Scalar>(ratios.size());
  return validate_spectrum(
      (sample.values().array() * (lin.array() / k)).matrix());
}

/// One eigenvector-correction step: diagonalize a covariance simulated from
/// `lambda_i`, then return diag(V diag(sample) V^T), sorted. The sum of the
/// output equals the sum of `sample` up to 1e-10 relative.
template <class Scalar>
Spectrum_<Scalar> eigenvector_correction(const Spectrum_<Scalar>& lambda_i,
                                         const Spectrum_<Scalar>& sample,
                                         Index n, RngStream& rng) {
  if (lambda_i.size() != sample.size())
    throw std::invalid_argument("eigenvector_correction: length mismatch");
  if (n < 1)
    throw std::invalid_argument("eigenvector_correction: n must be >= 1");
  const Scalar scale = sample.max();
  const VectorX<Scalar> corrected = detail::correction_core(
      detail::max_normalized(lambda_i.values()),
      detail::max_normalized(sample.values()), n, rng);
  if (!(scale > Scalar(0)))
    return Spectrum_<Scalar>::zeros(sample.size());
  return validate_spectrum((scale * corrected.array()).matrix());
}

/// Full recovery loop.
///
/// Starting from the sample spectrum, each loop (a) draws avg_k noise
/// matrices and forms ratio vectors from the current iterate, (b) applies
/// the closed-form L2 fit to the ORIGINAL sample spectrum, and (c) applies
/// one eigenvector correction, which yields the recorded iterate. Streams
/// are pre-assigned: loop i, ratio k uses (seed, i*(K+1)+k) and the
/// correction uses (seed, i*(K+1)+K), so results do not depend on execution
/// order and identical inputs give bit-identical results.
///
/// The loop state is kept dimensionless (sample normalized by its largest
/// entry, rescaled on output), which makes the result exactly positively
/// homogeneous: run(c * sample) == c * run(sample) whenever the rescalings
/// are exact in floating point.
template <class Scalar>
RecoveryResult_<Scalar> run(const Spectrum_<Scalar>& sample,
                            const ConcentConfig& config) {
  detail::check_config(config);
  const Index p = sample.size();
  const Index n = config.sample_count;
  const int k_draws = config.avg_k;
  const Scalar scale = sample.max();

  std::vector<Spectrum_<Scalar>> iterates;
  iterates.reserve(static_cast<std::size_t>(config.loops));

  if (!(scale > Scalar(0))) {
    for (int i = 0; i < config.loops; ++i)
      iterates.push_back(Spectrum_<Scalar>::zeros(p));
    Spectrum_<Scalar> recovered = iterates.back();
    return {std::move(recovered), std::move(iterates), config};
  }

  const VectorX<Scalar> base = sample.values() / scale;
  const Scalar floor = static_cast<Scalar>(config.ratio_floor);
  VectorX<Scalar> iterate = base;
  for (int i = 0; i < config.loops; ++i) {
    const std::uint64_t stream_base =
        static_cast<std::uint64_t>(i) *
        (static_cast<std::uint64_t>(k_draws) + 1);
    const VectorX<Scalar> model = detail::max_normalized(iterate);
    std::vector<VectorX<Scalar>> ratios;
    ratios.reserve(static_cast<std::size_t>(k_draws));
    for (int k = 0; k < k_draws; ++k) {
      RngStream rng(config.seed, stream_base + static_cast<std::uint64_t>(k));
      ratios.push_back(detail::ratio_core(model, n, rng, floor));
    }
    const VectorX<Scalar> fitted =
        validate_spectrum(detail::l2_fit_core(base, ratios)).values();

    RngStream rng(config.seed,
                  stream_base + static_cast<std::uint64_t>(k_draws));
    const VectorX<Scalar> corrected = detail::correction_core(
        detail::max_normalized(fitted), base, n, rng);
    if (!corrected.allFinite())
      throw NumericalError("run: non-finite iterate (numerical blow-up)");
    iterate = validate_spectrum(corrected).values();
    iterates.push_back(validate_spectrum((scale * iterate.array()).matrix()));
  }

  Spectrum_<Scalar> recovered = iterates.back();
  return {std::move(recovered), std::move(iterates), config};
}

}  // namespace concent
