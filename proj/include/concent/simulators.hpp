// Ground-truth spectrum generators, synthetic Gaussian data, the empirical
// concentration study, and Marchenko-Pastur reference curves.
#pragma once

#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "concent/linalg.hpp"
#include "concent/rng.hpp"
#include "concent/types.hpp"

namespace concent {

struct ConstantShape {
  double value = 1.0;
};

/// lambda_j = lo + j * (hi - lo) / p for j = 1..p.
struct LinearShape {
  double lo = 0.0;
  double hi = 1.0;
};

/// lambda_j = (j * x_hi / p)^exponent for j = 1..p.
struct PowerShape {
  double exponent = 1.0;
  double x_hi = 1.0;
};

/// Piecewise-constant blocks of (value, count); counts must sum to p.
struct StepShape {
  std::vector<std::pair<double, Index>> blocks;
};

/// Linear on (0, hi] with the smallest floor(zero_fraction * p) entries
/// zeroed out.
struct SparseLinearShape {
  double hi = 1.0;
  double zero_fraction = 0.0;
};

using SpectrumShape = std::variant<ConstantShape, LinearShape, PowerShape,
                                   StepShape, SparseLinearShape>;

template <class Scalar = double>
Spectrum_<Scalar> generate_spectrum(const SpectrumShape& shape, Index p) {
  if (p < 1) throw std::invalid_argument("generate_spectrum: p must be >= 1");
  VectorX<Scalar> raw(p);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantShape>) {
          if (!(s.value >= 0))
            throw std::invalid_argument("constant shape: value must be >= 0");
          raw.setConstant(static_cast<Scalar>(s.value));
        } else if constexpr (std::is_same_v<T, LinearShape>) {
          if (!(s.lo >= 0) || !(s.hi >= s.lo))
            throw std::invalid_argument("linear shape: need 0 <= lo <= hi");
          for (Index j = 1; j <= p; ++j)
            raw(j - 1) = static_cast<Scalar>(
                s.lo + static_cast<double>(j) * (s.hi - s.lo) / static_cast<double>(p));
        } else if constexpr (std::is_same_v<T, PowerShape>) {
          if (!(s.exponent >= 0) || !(s.x_hi >= 0))
            throw std::invalid_argument("power shape: parameters must be >= 0");
          for (Index j = 1; j <= p; ++j)
            raw(j - 1) = static_cast<Scalar>(std::pow(
                static_cast<double>(j) * s.x_hi / static_cast<double>(p),
                s.exponent));
        } else if constexpr (std::is_same_v<T, StepShape>) {
          if (s.blocks.empty())
            throw std::invalid_argument("step shape: need at least one block");
          Index at = 0;
          for (const auto& [value, count] : s.blocks) {
            if (!(value >= 0) || count < 0)
              throw std::invalid_argument("step shape: invalid block");
            if (at + count > p)
              throw std::invalid_argument("step shape: counts exceed p");
            raw.segment(at, count).setConstant(static_cast<Scalar>(value));
            at += count;
          }
          if (at != p)
            throw std::invalid_argument("step shape: counts must sum to p");
        } else {
          static_assert(std::is_same_v<T, SparseLinearShape>);
          if (!(s.hi >= 0) || !(s.zero_fraction >= 0) || !(s.zero_fraction <= 1))
            throw std::invalid_argument(
                "sparse linear shape: need hi >= 0 and zero_fraction in [0, 1]");
          for (Index j = 1; j <= p; ++j)
            raw(j - 1) = static_cast<Scalar>(static_cast<double>(j) * s.hi /
                                             static_cast<double>(p));
          const Index zeros = static_cast<Index>(
              std::floor(s.zero_fraction * static_cast<double>(p)));
          raw.head(std::min(zeros, p)).setZero();  // head holds the smallest
        }
      },
      shape);
  return validate_spectrum(raw);
}

/// Synthetic n x p data N diag(truth)^{1/2}, so that its uncentered sample
/// covariance equals sandwich(truth, N, n) up to round-off.
template <class Scalar = double>
MatrixX<Scalar> synthesize_data(const Spectrum_<Scalar>& truth, Index n,
                                RngStream& rng) {
  const MatrixX<Scalar> noise = gaussian_matrix<Scalar>(n, truth.size(), rng);
  return noise * truth.values().cwiseSqrt().asDiagonal();
}

namespace detail {

/// Worker cap for Monte Carlo fan-out: CONCENT_THREADS when set to a
/// positive integer, otherwise (or when 0) the available hardware
/// parallelism.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("CONCENT_THREADS")) {
    char* end = nullptr;
    const unsigned long parsed = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && parsed > 0)
      return static_cast<unsigned>(std::min<unsigned long>(parsed, 1024));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Static chunking over [0, count); fn(i) must only touch slot i of shared
// output so the result is identical for any worker count.
template <class Fn>
void parallel_for(Index count, Fn&& fn) {
  const Index workers = std::min<Index>(thread_budget(), count);
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    const Index begin = w * count / workers;
    const Index end = (w + 1) * count / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (Index i = begin; i < end; ++i) fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

template <class Scalar>
struct KahanAccumulator {
  Scalar sum{0};
  Scalar carry{0};
  void add(Scalar x) {
    const Scalar y = x - carry;
    const Scalar t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

/// Draws `reps` independent sample spectra from `truth` at sample size n and
/// summarizes their spread.
///
/// Reps run in parallel (capped by CONCENT_THREADS) on substreams rng + r;
/// aggregation always happens in rep order with compensated summation, so
/// the report does not depend on the worker count. Deviations are
/// normalized by max(truth); a zero truth yields all-zero statistics.
template <class Scalar = double>
ConcentrationReport_<Scalar> concentration_study(const Spectrum_<Scalar>& truth,
                                                 Index n, Index reps,
                                                 const RngStream& rng) {
  if (reps < 2)
    throw std::invalid_argument("concentration_study: reps must be >= 2");
  if (n < 1)
    throw std::invalid_argument("concentration_study: n must be >= 1");
  const Index p = truth.size();

  MatrixX<Scalar> draws(reps, p);
  detail::parallel_for(reps, [&](Index r) {
    RngStream rep_rng = rng.substream(static_cast<std::uint64_t>(r));
    const MatrixX<Scalar> noise = gaussian_matrix<Scalar>(n, p, rep_rng);
    draws.row(r) =
        validate_spectrum(
            detail::sym_eigenvalues(detail::sandwich_of(truth.values(), noise, n)))
            .values()
            .transpose();
  });

  ConcentrationReport_<Scalar> report;
  report.reps = reps;
  report.spectral_norm_reference = truth.max();
  report.per_index_mean.resize(p);
  report.per_index_std.resize(p);
  for (Index j = 0; j < p; ++j) {
    detail::KahanAccumulator<Scalar> acc;
    for (Index r = 0; r < reps; ++r) acc.add(draws(r, j));
    report.per_index_mean(j) = acc.sum / static_cast<Scalar>(reps);
  }
  for (Index j = 0; j < p; ++j) {
    detail::KahanAccumulator<Scalar> acc;
    for (Index r = 0; r < reps; ++r) {
      const Scalar d = draws(r, j) - report.per_index_mean(j);
      acc.add(d * d);
    }
    report.per_index_std(j) =
        std::sqrt(acc.sum / static_cast<Scalar>(reps - 1));
  }
  report.max_abs_deviation.resize(reps);
  const Scalar ref = report.spectral_norm_reference;
  for (Index r = 0; r < reps; ++r) {
    const Scalar dev =
        (draws.row(r).transpose() - report.per_index_mean).cwiseAbs().maxCoeff();
    report.max_abs_deviation(r) = ref > Scalar(0) ? dev / ref : Scalar(0);
  }
  return report;
}

/// Support edges ((1 - sqrt(c))^2, (1 + sqrt(c))^2) of the Marchenko-Pastur
/// law with aspect ratio c = p/n.
inline std::pair<double, double> mp_edges(double c) {
  if (!(c > 0)) throw std::invalid_argument("mp_edges: c must be > 0");
  const double s = std::sqrt(c);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

/// Continuous part of the Marchenko-Pastur density,
/// sqrt((b - x)(x - a)) / (2 pi c x) on [a, b] and 0 outside. For c > 1 the
/// point mass at zero is reported separately by mp_point_mass.
inline double mp_density(double x, double c) {
  const auto [a, b] = mp_edges(c);
  if (x <= 0.0 || x <= a || x >= b) return 0.0;
  return std::sqrt((b - x) * (x - a)) / (2.0 * std::numbers::pi * c * x);
}

/// Mass of the atom at zero: max(0, 1 - 1/c).
inline double mp_point_mass(double c) {
  if (!(c > 0)) throw std::invalid_argument("mp_point_mass: c must be > 0");
  return c > 1.0 ? 1.0 - 1.0 / c : 0.0;
}

}  // namespace concent
