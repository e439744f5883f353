#include <doctest.h>

#include <cmath>
#include <random>

#include "lrchain/error.hpp"
#include "lrchain/analysis.hpp"
#include "lrchain/microstates.hpp"
#include "lrchain/solver.hpp"
#include "oracles/oracles.hpp"
#include "test_common.hpp"

using namespace lrchain;

namespace {

std::vector<int> as_int(const Assignment& a) { return std::vector<int>(a.begin(), a.end()); }

void check_result(const EnergyModel& model, const SolveResult& r, double ell) {
  double mean = 0.0;
  for (double z : r.config.slopes) mean += z / r.config.n;
  CHECK(std::abs(mean - ell) < 1e-9);
  CHECK(std::abs(total_renormalized_energy(model, r.config).value - r.energy) < 1e-10);
}

}  // namespace

TEST_CASE("convex solve: pure phase") {
  const auto& ep = testing::prototype(2);
  const EnergyModel model(ep, 1.2);
  const Assignment sigma(8, 2);
  const auto r = convex_solve_given_assignment(model, 8, sigma);
  for (double z : r.slopes) CHECK(z == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(std::abs(r.energy) < 1e-12);
  CHECK(r.consistent);
  CHECK(r.grad_norm < 1e-10);
}

TEST_CASE("convex solve: n = 2 against the 1-D golden-section oracle") {
  const auto& ep = testing::prototype(2);
  const EnergyModel model(ep, 0.0);
  const auto w = oracle::prototype();
  const auto f = [&](double t) {
    // slopes (-t, t), sigma = (1, 2): both cells have mean 0
    return 2 * w.psim(0.0) + w.w1(-t) + w.w2(t);
  };
  const double zstar = oracle::golden_min(f, 0.0, 3.0);
  const auto r = convex_solve_given_assignment(model, 2, Assignment{1, 2});
  CHECK(r.slopes[0] == doctest::Approx(-zstar).epsilon(1e-6));
  CHECK(r.slopes[1] == doctest::Approx(zstar).epsilon(1e-6));
  CHECK(zstar == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(r.energy) < 1e-14);
}

TEST_CASE("convex solve matches the closed-form linear system") {
  std::mt19937_64 rng(23);
  const auto w = oracle::prototype();
  for (int M : {2, 3}) {
    const auto& ep = testing::prototype(M);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = M + static_cast<int>(rng() % 30);
      const double ell = -1.2 + 2.4 * static_cast<double>(rng() % 1000) / 999.0;
      const EnergyModel model(ep, ell);
      Assignment sigma(static_cast<std::size_t>(n));
      std::vector<int> s(static_cast<std::size_t>(n));
      for (int b = 0; b < n; ++b) s[static_cast<std::size_t>(b)] = sigma[static_cast<std::size_t>(b)] = rng() % 2 ? 1 : 2;
      const auto r = convex_solve_given_assignment(model, n, sigma);
      const auto o = oracle::chain_given(w, M, ell, s, model.tangent().slope, model.tangent().intercept);
      CHECK(r.grad_norm < 1e-10);
      CHECK(std::abs(r.energy - o.energy) < 1e-9);
      for (int b = 0; b < n; ++b) CHECK(std::abs(r.slopes[static_cast<std::size_t>(b)] - o.z[static_cast<std::size_t>(b)]) < 1e-9);
    }
  }
}

TEST_CASE("brute force oracle examples") {
  const auto& e2 = testing::prototype(2);
  {
    const EnergyModel model(e2, 0.0);
    const auto r = brute_force_oracle(model, 4);
    CHECK(r.optimality == Optimality::OracleCertified);
    CHECK(as_int(r.assignment) == std::vector<int>{1, 2, 1, 2});
    CHECK(std::abs(r.energy) < 1e-12);
  }
  {
    const EnergyModel model(e2, 1.5);
    const auto r = brute_force_oracle(model, 4);
    CHECK(as_int(r.assignment) == std::vector<int>{2, 2, 2, 2});
    CHECK(std::abs(r.energy) < 1e-12);
  }
  {
    const auto& e3 = testing::prototype(3);
    const auto set = minimizer_set_ell(e3, 1.0 / 3.0);
    REQUIRE(set.members.front().j == 1);
    const EnergyModel model(e3, set.members.front().alpha);
    const auto r = brute_force_oracle(model, 6);
    CHECK(std::abs(r.energy) < 1e-12);
    for (int blk = 0; blk < 2; ++blk) {
      int ones = 0;
      for (int k = 0; k < 3; ++k) ones += r.assignment[static_cast<std::size_t>(3 * blk + k)] == 1;
      CHECK(ones == 1);
    }
  }
  CHECK_THROWS_AS(brute_force_oracle(EnergyModel(e2, 0.0), 17), Error);
}

TEST_CASE("frozen oracle energies") {
  // values of the independent closed-form enumeration, frozen
  const auto& e2 = testing::prototype(2);
  struct Case {
    double ell;
    int n;
    double energy;
  };
  const Case cases[] = {{0.0, 5, 0.38360655737704913},
                        {0.0, 7, 0.33789251128918596},
                        {0.5, 5, 0.062295081967213339},
                        {0.5, 12, 0.0223606784354453}};
  const auto w = oracle::prototype();
  for (const auto& c : cases) {
    const EnergyModel model(e2, c.ell);
    const auto o = oracle::chain_min(w, 2, c.ell, c.n, model.tangent().slope, model.tangent().intercept);
    CHECK(o.energy == doctest::Approx(c.energy).epsilon(1e-10));
    CHECK(brute_force_oracle(model, c.n).energy == doctest::Approx(c.energy).epsilon(1e-10));
  }
}

TEST_CASE("global minimize: pure phases reach zero") {
  for (int M : {2, 3}) {
    const auto& ep = testing::prototype(M);
    for (std::size_t k = 0; k < ep.envelope().k.size(); ++k) {
      const auto& K = ep.envelope().k[k];
      const double ell = std::isinf(K.left) ? K.right - 0.3 : std::isinf(K.right) ? K.left + 0.3 : 0.5 * (K.left + K.right);
      const EnergyModel model(ep, ell);
      for (int n : {M * 4, M * 10}) {
        const auto r = global_minimize(model, n);
        CHECK(r.energy <= 1e-9);
        check_result(model, r, ell);
      }
    }
  }
}

TEST_CASE("global minimize agrees with the oracle on random instances") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 16; ++trial) {
    const int M = 2 + static_cast<int>(rng() % 2);
    const int n = 4 + static_cast<int>(rng() % 9);
    const double ell = -1.1 + 2.2 * static_cast<double>(rng() % 10000) / 9999.0;
    const auto& ep = testing::prototype(M);
    const EnergyModel model(ep, ell);
    SolverOptions opts;
    opts.seed = trial;
    const auto g = global_minimize(model, n, opts);
    const auto b = brute_force_oracle(model, n);
    CHECK(std::abs(g.energy - b.energy) < 1e-8);
    check_result(model, g, ell);
    for (const auto& seed : structured_seeds(model, n)) {
      const auto c = convex_solve_given_assignment(model, n, seed);
      CHECK(g.energy <= c.true_energy + 1e-10);
    }
  }
}

TEST_CASE("certify flag") {
  const EnergyModel model(testing::prototype(2), 0.3);
  SolverOptions opts;
  opts.certify = true;
  CHECK(global_minimize(model, 10, opts).optimality == Optimality::OracleCertified);
  CHECK(global_minimize(model, 10).optimality == Optimality::Heuristic);
}

TEST_CASE("two-phase minimizer in a J segment") {
  const auto& ep = testing::prototype(2);
  const double ell = 0.5;
  const EnergyModel model(ep, ell);
  const auto r = global_minimize(model, 60);
  check_result(model, r, ell);
  const auto phases = detect_interfaces(model, r.config);
  CHECK(phases.interfaces.size() == 2);
  // fraction of the right phase: lambda z_l + (1 - lambda) z_r = ell
  const auto& seg = ep.envelope().j[1];
  const double lambda = (seg.z_right - ell) / (seg.z_right - seg.z_left);
  double left_len = 0.0;
  for (const auto& s : phases.segments)
    if (std::abs(s.alpha - seg.z_left) < 1e-6) left_len += s.length;
  CHECK(std::abs(left_len - lambda) <= 2.0 * 2 / 60.0);
}

TEST_CASE("thread count does not change the result") {
  const EnergyModel model(testing::prototype(3), 0.1);
  SolverOptions a, b;
  a.threads = 1;
  b.threads = 3;
  a.seed = b.seed = 4;
  const auto ra = global_minimize(model, 30, a);
  const auto rb = global_minimize(model, 30, b);
  CHECK(ra.energy == rb.energy);
  CHECK(ra.assignment == rb.assignment);
  CHECK(ra.config.slopes == rb.config.slopes);
}

TEST_CASE("budget exhaustion carries the best result") {
  const EnergyModel model(testing::prototype(2), 0.5);
  SolverOptions opts;
  opts.budget = 3;
  try {
    global_minimize(model, 40, opts);
    FAIL("expected BudgetExhausted");
  } catch (const BudgetExhaustedError& e) {
    CHECK(e.code() == ErrorCode::BudgetExhausted);
    CHECK(e.best().config.n == 40);
    CHECK(std::isfinite(e.best().energy));
  }
}

TEST_CASE("pure phase stays at zero under refinement") {
  const EnergyModel model(testing::prototype(2), 0.0);
  double prev = global_minimize(model, 8).energy;
  for (int n : {16, 32, 64}) {
    const double e = global_minimize(model, n).energy;
    CHECK(e <= prev + 1e-12);
    CHECK(e <= 1e-9);
    prev = e;
  }
}
