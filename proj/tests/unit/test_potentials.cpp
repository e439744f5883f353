#include <doctest.h>

#include <cmath>
#include <random>

#include "lrchain/error.hpp"
#include "lrchain/potentials.hpp"
#include "test_common.hpp"

using namespace lrchain;

TEST_CASE("psi1 evaluation and tie-break") {
  const auto spec = testing::prototype_spec();
  const auto v0 = spec.psi1.eval(0.0);
  CHECK(v0.value == 1.0);
  CHECK(v0.active_well == 1);
  const auto v1 = spec.psi1.eval(1.0);
  CHECK(v1.value == 0.0);
  CHECK(v1.active_well == 2);
  const auto v3 = spec.psi1.eval(-3.0);
  CHECK(v3.value == 4.0);
  CHECK(v3.active_well == 1);
}

TEST_CASE("crossing points") {
  const auto spec = testing::prototype_spec();
  auto c = spec.psi1.crossing_points();
  REQUIRE(c.size() == 1);
  CHECK(std::abs(c[0]) < 1e-12);

  DoubleWell wide(ConvexWell::quadratic(-2.0, 1.0), ConvexWell::quadratic(2.0, 1.0));
  c = wide.crossing_points();
  REQUIRE(c.size() == 1);
  CHECK(std::abs(c[0]) < 1e-12);

  DoubleWell apart(ConvexWell::polynomial({0.0, 0.0, 1.0}), ConvexWell::polynomial({1.0, 0.0, 1.0}));
  try {
    apart.crossing_points();
    FAIL("expected NoCrossing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoCrossing);
  }
}

TEST_CASE("regions cover the range and agree with the active well") {
  const auto spec = testing::prototype_spec();
  const auto& dw = spec.psi1;
  const auto& a1 = dw.region(1);
  const auto& a2 = dw.region(2);
  REQUIRE(a1.size() == 1);
  REQUIRE(a2.size() == 1);
  CHECK(a1[0].lo == -dw.range_half_width());
  CHECK(std::abs(a1[0].hi) < 1e-12);
  CHECK(std::abs(a2[0].lo) < 1e-12);
  CHECK(a2[0].hi == dw.range_half_width());
  CHECK(dw.range_half_width() == 16.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-16.0, 16.0);
  for (int k = 0; k < 500; ++k) {
    const double z = U(rng);
    const auto v = dw.eval(z);
    CHECK(v.value <= dw.w1().value(z));
    CHECK(v.value <= dw.w2().value(z));
    CHECK(v.value == dw.well(v.active_well).value(z));
    CHECK((a1[0].contains(z) || a2[0].contains(z)));
  }
}

TEST_CASE("derivatives") {
  const auto w = ConvexWell::quadratic(1.0, 1.0);
  CHECK(derivative(w, 1.0) == 0.0);
  CHECK(derivative(w, 3.0) == 4.0);
  const LongRangePotential pm(ConvexWell::quadratic(0.0, 0.25));
  CHECK(pm.derivative(2.0) == 1.0);

  const auto p = ConvexWell::polynomial({0.5, -1.0, 0.0, 0.0, 0.25});
  for (double z : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    const double h = 1e-6;
    const double fd = (p.value(z + h) - p.value(z - h)) / (2 * h);
    CHECK(std::abs(p.derivative(z) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
  CHECK(p.bottom() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("well construction rejects bad parameters") {
  CHECK_THROWS_AS(ConvexWell::quadratic(0.0, 0.0), Error);
  CHECK_THROWS_AS(ConvexWell::quadratic(0.0, -1.0), Error);
  CHECK_THROWS_AS(ConvexWell::polynomial({0.0, 1.0, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(ConvexWell::polynomial({0.0, 0.0, -1.0}), Error);
}

TEST_CASE("convexity, growth and superlinearity checks") {
  const auto spec = testing::prototype_spec();
  CHECK_NOTHROW(validate(spec));
  const Interval range = spec.psi1.range();
  CHECK(check_convexity(spec.psi1.w1(), range).ok(1e-12));
  CHECK(check_growth(spec.psi1.w1(), 0.5, range).ok(1e-9));
  CHECK(check_strict_convexity(spec.psi_m.well(), range).worst < 0.0);

  // growth constant too large for curvature 1 wells
  PotentialSpec tight = spec;
  tight.growth_constant = 2.0;
  CHECK_THROWS_AS(validate(tight), Error);

  // non-convex polynomial well (double well itself)
  const auto wiggle = ConvexWell::polynomial({0.0, 0.0, -1.0, 0.0, 1.0});
  CHECK_FALSE(check_convexity(wiggle, range).ok(1e-12));
  PotentialSpec bad{DoubleWell(wiggle, ConvexWell::quadratic(1.0, 1.0)), spec.psi_m, 0.1};
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("randomized second-difference convexity") {
  const auto w = ConvexWell::polynomial({1.0, 0.3, 2.0, 0.0, 0.1});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-10.0, 10.0), H(1e-3, 2.0);
  for (int k = 0; k < 2000; ++k) {
    const double z = U(rng), h = H(rng);
    CHECK(w.value(z - h) - 2 * w.value(z) + w.value(z + h) >= -1e-12);
  }
}
