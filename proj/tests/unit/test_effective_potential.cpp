#include <doctest.h>

#include <cmath>
#include <random>

#include "lrchain/error.hpp"
#include "lrchain/effective_potential.hpp"
#include "oracles/oracles.hpp"
#include "test_common.hpp"

using namespace lrchain;

TEST_CASE("solve_branch examples") {
  const auto& ep = testing::prototype(2);
  auto b = ep.solve_branch(0, 1.0);
  CHECK(b.feasible);
  CHECK(b.z2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(b.value) < 1e-14);

  b = ep.solve_branch(1, 0.0);
  CHECK(b.z1 == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(b.z2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(b.value) < 1e-14);

  // grid oracle over (z1, z2), step 1e-4: z1 = -0.75, z2 = 1.25, value 0.125
  const auto g = oracle::grid_branch(oracle::prototype(), 2, 1, 0.25);
  b = ep.solve_branch(1, 0.25);
  CHECK(std::abs(b.z1 - g.z1) < 1e-4);
  CHECK(std::abs(b.z2 - g.z2) < 1e-4);
  CHECK(std::abs(b.value - g.value) < 1e-7);
  CHECK(b.value == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(b.z1 == doctest::Approx(-0.75).epsilon(1e-12));
  CHECK(b.z2 == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("solve_branch matches the grid oracle, M = 3") {
  const auto& ep = testing::prototype(3);
  const auto w = oracle::prototype();
  for (double z : {-0.8, -0.3, 0.0, 0.2, 0.35, 0.7}) {
    for (int j = 0; j <= 3; ++j) {
      const auto g = oracle::grid_branch(w, 3, j, z, 1e-4);
      const auto b = ep.try_branch(j, z);
      CHECK(b.has_value() == std::isfinite(g.value));
      if (b && std::isfinite(g.value)) CHECK(std::abs(b->value - g.value) < 1e-6);
    }
  }
}

TEST_CASE("infeasible branch") {
  const auto& ep = testing::prototype(2);
  // all slopes in A2 = [0, R] cannot average to -1
  CHECK_THROWS_AS(ep.solve_branch(0, -1.0), Error);
  CHECK_FALSE(ep.try_branch(0, -1.0).has_value());
  CHECK(std::isinf(ep.branch_value(0, -1.0)));
}

TEST_CASE("psi0 examples") {
  const auto& ep = testing::prototype(2);
  auto v = ep.psi0(1.0);
  CHECK(v.value == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(v.argmin == std::vector<int>{0});
  v = ep.psi0(0.0);
  CHECK(std::abs(v.value) < 1e-14);
  CHECK(v.argmin == std::vector<int>{1});
  // branch grid oracle: branches 0 and 1 tie at 0.3125
  v = ep.psi0(0.5);
  CHECK(std::abs(v.value - oracle::grid_psi0(oracle::prototype(), 2, 0.5)) < 1e-7);
  CHECK(v.value == doctest::Approx(0.3125).epsilon(1e-12));
  CHECK(v.argmin == std::vector<int>{0, 1});
}

TEST_CASE("prototype envelope structure, M = 2") {
  const auto& ep = testing::prototype(2);
  const auto& env = ep.envelope();
  REQUIRE(env.k.size() == 3);
  REQUIRE(env.j.size() == 2);
  CHECK(env.k[0].j == 2);
  CHECK(env.k[1].j == 1);
  CHECK(env.k[2].j == 0);
  CHECK(std::isinf(env.k[0].left));
  CHECK(std::isinf(env.k[2].right));
  for (const auto& s : env.j) {
    const auto t = oracle::prototype_bitangent(2, s.left_branch);
    CHECK(std::abs(s.z_left - t.a) < 1e-9);
    CHECK(std::abs(s.z_right - t.b) < 1e-9);
    CHECK(std::abs(s.slope - t.slope) < 1e-9);
    CHECK(std::abs(s.intercept - t.intercept) < 1e-9);
    CHECK_FALSE(s.degenerate);
  }
  // closed forms of the bitangent: +-0.1, +-0.9, slopes +-1/4, intercept -1/80
  CHECK(std::abs(env.j[1].z_left - 0.1) < 1e-9);
  CHECK(std::abs(env.j[1].z_right - 0.9) < 1e-9);
  CHECK(std::abs(env.j[1].intercept + 0.0125) < 1e-9);
  CHECK(std::abs(env.k[1].left + env.k[1].right) < 1e-8);
  CHECK(std::abs(env.j[0].z_left + env.j[1].z_right) < 1e-8);
  CHECK(std::abs(env.j[0].z_right + env.j[1].z_left) < 1e-8);
}

TEST_CASE("envelope endpoints match the bitangent oracle for M = 3..5") {
  for (int M : {3, 4, 5}) {
    const auto& ep = testing::prototype(M);
    const auto& env = ep.envelope();
    REQUIRE(static_cast<int>(env.k.size()) == M + 1);
    for (const auto& s : env.j) {
      const auto t = oracle::prototype_bitangent(M, s.left_branch);
      CHECK(s.right_branch == s.left_branch - 1);
      CHECK(std::abs(s.z_left - t.a) < 1e-9);
      CHECK(std::abs(s.z_right - t.b) < 1e-9);
      CHECK(std::abs(s.slope - t.slope) < 1e-9);
    }
  }
  // M = 3: K_1 = (4/15, 2/5)
  const auto& e3 = testing::prototype(3).envelope();
  CHECK(std::abs(e3.k[2].left - 4.0 / 15.0) < 1e-9);
  CHECK(std::abs(e3.k[2].right - 0.4) < 1e-9);
}

TEST_CASE("single-well input has no affine segments") {
  PotentialSpec s{DoubleWell(ConvexWell::quadratic(1, 1), ConvexWell::quadratic(1, 1)),
                  LongRangePotential(ConvexWell::quadratic(0, 0.25)), 0.5};
  const EffectivePotential ep(s, 2);
  CHECK(ep.envelope().j.empty());
  for (double z = -3; z <= 3; z += 0.37) CHECK(std::abs(ep.convex_envelope(z) - ep.psi0(z).value) < 1e-9);
}

TEST_CASE("tangent line") {
  const auto& ep = testing::prototype(2);
  auto t = ep.tangent(0.0);
  CHECK(t.regime == Regime::InteriorK);
  CHECK(std::abs(t.slope) < 1e-12);
  CHECK(std::abs(t.intercept - ep.convex_envelope(0.0)) < 1e-12);
  CHECK(std::abs(ep.convex_envelope(0.0)) < 1e-14);

  t = ep.tangent(0.5);
  CHECK(t.regime == Regime::SegmentJ);
  const auto& seg = ep.envelope().j[static_cast<std::size_t>(t.segment)];
  CHECK(t.slope == seg.slope);
  CHECK(t.intercept == seg.intercept);

  const auto tk = ep.tangent(1.6);
  CHECK(tk.regime == Regime::InteriorK);
  CHECK(std::abs(tk.slope - ep.branch_derivative(0, 1.6)) < 1e-10);
}

TEST_CASE("horizontal tangent at the bottom of K") {
  // K_1 of M = 2 contains the branch minimum z = 0
  const auto& ep = testing::prototype(2);
  CHECK(std::abs(ep.branch_derivative(1, 0.0)) < 1e-12);
  const auto t = ep.tangent(0.0);
  CHECK(std::abs(t.slope) < 1e-12);
  CHECK(std::abs(t(0.0) - ep.psi0(0.0).value) < 1e-12);
  CHECK(std::abs(t(0.05) - ep.psi0(0.0).value) < 1e-12);
}

TEST_CASE("envelope invariants on a grid") {
  for (int M : {2, 3}) {
    const auto& ep = testing::prototype(M);
    const double h = 1e-3;
    std::vector<double> zs, env;
    for (double z = -2.0; z <= 2.0 + 1e-12; z += h) {
      zs.push_back(z);
      env.push_back(ep.convex_envelope(z));
    }
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const double p = ep.psi0(zs[k]).value;
      CHECK(env[k] <= p + 1e-12);
      if (k > 0 && k + 1 < zs.size()) CHECK(env[k - 1] - 2 * env[k] + env[k + 1] >= -1e-10);
    }
    // idempotence: the hull of the envelope samples reproduces them
    const auto hull = lower_convex_hull(zs, env);
    for (std::size_t h0 = 0; h0 + 1 < hull.size(); ++h0) {
      const std::size_t a = hull[h0], b = hull[h0 + 1];
      for (std::size_t k = a; k <= b; ++k) {
        const double t = (zs[k] - zs[a]) / (zs[b] - zs[a]);
        CHECK(std::abs(env[a] + t * (env[b] - env[a]) - env[k]) < 1e-9);
      }
    }
    for (double ell : {-1.5, -0.5, 0.0, 0.3, 0.777, 1.2}) {
      TangentLine t;
      try {
        t = ep.tangent(ell);
      } catch (const Error&) {
        continue;
      }
      CHECK(std::abs(t(ell) - ep.convex_envelope(ell)) < 1e-10);
      for (std::size_t k = 0; k < zs.size(); k += 7) {
        CHECK(t(zs[k]) <= env[k] + 1e-10);
        CHECK(ep.psi0(zs[k]).value - t(zs[k]) >= -1e-12);
      }
    }
  }
}

TEST_CASE("Jensen dominance") {
  const auto w = oracle::prototype();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0.0, 1.2);
  for (int M : {2, 3}) {
    const auto& ep = testing::prototype(M);
    for (int trial = 0; trial < 400; ++trial) {
      std::vector<double> z(static_cast<std::size_t>(M));
      double mean = 0.0;
      for (auto& x : z) mean += (x = N(rng)) / M;
      double avg = 0.0;
      for (double x : z) avg += w.psi1(x) / M;
      CHECK(avg + w.psim(mean) >= ep.psi0(mean).value - 1e-10);
    }
  }
}

TEST_CASE("psi0 against the dense grid oracle") {
  const auto w = oracle::prototype();
  for (int M : {2, 3}) {
    const auto& ep = testing::prototype(M);
    for (int k = 0; k < 25; ++k) {
      const double z = -1.8 + 3.6 * k / 24.0;
      CHECK(std::abs(ep.psi0(z).value - oracle::grid_psi0(w, M, z)) < 1e-6);
    }
  }
}

TEST_CASE("lower convex hull") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> y{0, -1, 0.5, -1, 0};
  const auto h = lower_convex_hull(x, y);
  CHECK(h == std::vector<std::size_t>{0, 1, 3, 4});
}
