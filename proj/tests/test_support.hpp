// Shared helpers for the test binaries: medians, random spectra, and the
// independent oracles (grid minimizer, MP quadrature).
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

#include "concent/concent.hpp"
#include "concent/rng.hpp"
#include "concent/simulators.hpp"
#include "concent/types.hpp"

namespace test_support {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Random valid spectrum with entries in [lo, hi], occasionally with a zero
/// tail when allow_zeros is set.
inline concent::Spectrum random_spectrum(concent::RngStream& rng,
                                         concent::Index p, double lo,
                                         double hi, bool allow_zeros = false) {
  concent::VectorX<double> v(p);
  for (concent::Index i = 0; i < p; ++i)
    v(i) = lo + (hi - lo) * rng.next_uniform();
  if (allow_zeros && p > 1 && rng.next_uniform() < 0.4) {
    const concent::Index zeros =
        1 + static_cast<concent::Index>(rng.next_u64() % (p / 2 + 1));
    std::sort(v.begin(), v.end(), std::greater<double>());
    v.tail(std::min(zeros, p - 1)).setZero();
  }
  return concent::validate_spectrum(v);
}

/// Brute-force 1-D grid minimizer of f(d) = sum_k (target - r_k d)^2 over
/// [0, hi] with the given step.
inline double grid_minimize_1d(double target, const std::vector<double>& rk,
                               double hi, double step) {
  const auto objective = [&](double d) {
    double f = 0;
    for (double r : rk) {
      const double e = target - r * d;
      f += e * e;
    }
    return f;
  };
  double best_d = 0, best_f = objective(0);
  const long steps = static_cast<long>(hi / step);
  for (long i = 1; i <= steps; ++i) {
    const double d = static_cast<double>(i) * step;
    const double f = objective(d);
    if (f < best_f) {
      best_f = f;
      best_d = d;
    }
  }
  return best_d;
}

/// Two-stage grid refinement: the coordinate objective is a strictly convex
/// quadratic, so the coarse argmin brackets the true minimizer within one
/// coarse step; the fine pass resolves it below fine_step.
inline double grid_minimize_1d_refined(double target,
                                       const std::vector<double>& rk,
                                       double hi, double coarse_step,
                                       double fine_step) {
  const double coarse = grid_minimize_1d(target, rk, hi, coarse_step);
  const double lo = std::max(0.0, coarse - 2 * coarse_step);
  const auto objective = [&](double d) {
    double f = 0;
    for (double r : rk) {
      const double e = target - r * d;
      f += e * e;
    }
    return f;
  };
  double best_d = lo, best_f = objective(lo);
  const long steps = static_cast<long>(4 * coarse_step / fine_step);
  for (long i = 1; i <= steps; ++i) {
    const double d = lo + static_cast<double>(i) * fine_step;
    const double f = objective(d);
    if (f < best_f) {
      best_f = f;
      best_d = d;
    }
  }
  return best_d;
}

/// Expected Marchenko-Pastur mass of [lo, hi] by Simpson quadrature on the
/// substitution x = a + (b - a) sin^2(theta), which makes the integrand
/// smooth across both square-root edges (and across x = 0 when a = 0).
inline double mp_bin_mass(double lo, double hi, double c) {
  const auto [a, b] = concent::mp_edges(c);
  const double clo = std::clamp(lo, a, b);
  const double chi = std::clamp(hi, a, b);
  if (chi <= clo) return 0.0;
  const auto theta = [&](double x) {
    return std::asin(std::sqrt((x - a) / (b - a)));
  };
  const auto integrand = [&](double t) {
    const double st = std::sin(t), ct = std::cos(t);
    const double x = a + (b - a) * st * st;
    if (x <= 0.0)
      return a == 0.0 ? (b - a) / (std::numbers::pi * c) * ct * ct : 0.0;
    return (b - a) * (b - a) * 2.0 * st * st * ct * ct /
           (2.0 * std::numbers::pi * c * x);
  };
  const double t0 = theta(clo), t1 = theta(chi);
  const int n = 2000;
  const double h = (t1 - t0) / n;
  double s = integrand(t0) + integrand(t1);
  for (int i = 1; i < n; ++i) s += integrand(t0 + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

}  // namespace test_support
