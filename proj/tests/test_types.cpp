#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "concent/rng.hpp"
#include "concent/types.hpp"

using namespace concent;

TEST_CASE("validate_spectrum sorts descending") {
  const Spectrum s = validate_spectrum(Eigen::Vector3d(3, 1, 2));
  CHECK(s.size() == 3);
  CHECK(s[0] == 3.0);
  CHECK(s[1] == 2.0);
  CHECK(s[2] == 1.0);
}

TEST_CASE("validate_spectrum keeps the all-zero spectrum") {
  const Spectrum s = validate_spectrum(Eigen::Vector2d(0, 0));
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 0.0);
}

TEST_CASE("validate_spectrum clamps round-off near zero") {
  const Spectrum s = validate_spectrum(Eigen::Vector2d(1.0, -1e-13));
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 0.0);
  // tiny positive round-off snaps too, keeping rank-deficient spectra exact
  const Spectrum t = validate_spectrum(Eigen::Vector2d(1.0, 1e-13));
  CHECK(t[1] == 0.0);
}

TEST_CASE("validate_spectrum rejects genuinely negative input") {
  CHECK_THROWS_AS(validate_spectrum(Eigen::Vector2d(1.0, -1e-3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_spectrum(Eigen::Vector2d(1.0, -2e-10)),
                  std::invalid_argument);
}

TEST_CASE("validate_spectrum rejects empty and non-finite input") {
  CHECK_THROWS_AS(validate_spectrum(Eigen::VectorXd(0)), std::invalid_argument);
  CHECK_THROWS_AS(
      validate_spectrum(Eigen::Vector2d(1.0, std::numeric_limits<double>::quiet_NaN())),
      std::invalid_argument);
  CHECK_THROWS_AS(
      validate_spectrum(Eigen::Vector2d(1.0, std::numeric_limits<double>::infinity())),
      std::invalid_argument);
}

TEST_CASE("validate_spectrum is idempotent and produces valid spectra") {
  RngStream rng(2024, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index p = 1 + static_cast<Index>(rng.next_u64() % 12);
    VectorX<double> raw(p);
    for (Index i = 0; i < p; ++i) raw(i) = 5.0 * rng.next_uniform();
    if (trial % 3 == 0) raw(p - 1) = -1e-12 * raw.maxCoeff();  // clampable

    const Spectrum once = validate_spectrum(raw);
    const Spectrum twice = validate_spectrum(once.values());
    CHECK(once.values() == twice.values());

    for (Index i = 0; i < p; ++i) {
      CHECK(once[i] >= 0.0);
      if (i > 0) CHECK(once[i - 1] >= once[i]);
    }
    CHECK(once.max() == once.values().maxCoeff());
  }
}

TEST_CASE("Spectrum::zeros") {
  const Spectrum z = Spectrum::zeros(4);
  CHECK(z.size() == 4);
  CHECK(z.sum() == 0.0);
  CHECK_THROWS_AS(Spectrum::zeros(0), std::invalid_argument);
}

TEST_CASE("validate_spectrum works for float scalars") {
  using Vec3f = Eigen::Vector3f;
  const auto s = validate_spectrum(Vec3f(2.0f, 4.0f, 1.0f));
  CHECK(s[0] == 4.0f);
  CHECK(s[2] == 1.0f);
}
