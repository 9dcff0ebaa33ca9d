// Counter-based random number streams.
//
// Reproducibility contract: the k-th value of RngStream(seed, stream) is a
// pure function of (seed, stream, k), bit-identical across runs and across
// platforms of the same build. Distinct streams of one seed partition the
// generator's counter space, so parallel workers with distinct stream ids
// can never share a sequence segment.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace concent {

namespace detail {

// SplitMix64 finalizer, used to whiten the user seed into a Philox key.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Inverse of the standard normal CDF (Wichura's AS 241, PPND16 variant),
// accurate to ~1e-15 relative over (0, 1).
inline double inverse_normal_cdf(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw std::invalid_argument("inverse_normal_cdf: p must be in (0, 1)");

  static constexpr double a[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e2,
      1.9715909503065514427e3,  1.3731693765509461125e4,
      4.5921953931549871457e4,  6.7265770927008700853e4,
      3.3430575583588128105e4,  2.5090809287301226727e3};
  static constexpr double b[8] = {
      1.0,                      4.2313330701600911252e1,
      6.8718700749205790830e2,  5.3941960214247511077e3,
      2.1213794301586595867e4,  3.9307895800092710610e4,
      2.8729085735721942674e4,  5.2264952788528545610e3};
  static constexpr double c[8] = {
      1.42343711074968357734e0,  4.63033784615654529590e0,
      5.76949722146069140550e0,  3.64784832476320460504e0,
      1.27045825245236838258e0,  2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[8] = {
      1.0,                       2.05319162663775882187e0,
      1.67638483018380384940e0,  6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static constexpr double e[8] = {
      6.65790464350110377720e0,  5.46378491116411436990e0,
      1.78482653991729133580e0,  2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[8] = {
      1.0,                       5.99832206555887937690e-1,
      1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};

  const auto poly = [](const double (&coef)[8], double x) {
    double acc = coef[7];
    for (int i = 6; i >= 0; --i) acc = acc * x + coef[i];
    return acc;
  };

  const double q = prob - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(a, r) / poly(b, r);
  }
  double r = q < 0.0 ? prob : 1.0 - prob;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = poly(c, r) / poly(d, r);
  } else {
    r -= 5.0;
    value = poly(e, r) / poly(f, r);
  }
  return q < 0.0 ? -value : value;
}

}  // namespace detail

/// One independent random stream, identified by (seed, stream).
///
/// Implementation: Philox2x64-10 with key = mix64(seed) and 128-bit counter
/// (block index, stream id). Each block yields two 64-bit words.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : seed_(seed), stream_(stream), key_(detail::mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Fresh stream (seed, stream + offset) starting at counter 0.
  RngStream substream(std::uint64_t offset) const noexcept {
    return RngStream(seed_, stream_ + offset);
  }

  std::uint64_t next_u64() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    std::uint64_t x0 = next_block_++;
    std::uint64_t x1 = stream_;
    std::uint64_t k = key_;
    for (int round = 0; round < 10; ++round) {
      const auto prod =
          static_cast<unsigned __int128>(x0) * 0xd2b74407b1ce6e93ull;
      const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
      const std::uint64_t lo = static_cast<std::uint64_t>(prod);
      x0 = hi ^ k ^ x1;
      x1 = lo;
      k += 0x9e3779b97f4a7c15ull;
    }
    spare_ = x1;
    has_spare_ = true;
    return x0;
  }

  /// Uniform double strictly inside (0, 1), 53 significant bits.
  double next_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal deviate; consumes exactly one uniform.
  double next_normal() { return detail::inverse_normal_cdf(next_uniform()); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t next_block_ = 0;
  std::uint64_t spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace concent
