#include <doctest.h>

#include <cmath>
#include <random>

#include "lrchain/error.hpp"
#include "lrchain/lattice_energy.hpp"
#include "lrchain/microstates.hpp"
#include "oracles/oracles.hpp"
#include "test_common.hpp"

using namespace lrchain;

namespace {

std::vector<double> tile(const std::vector<double>& z, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i) % z.size()];
  return out;
}

}  // namespace

TEST_CASE("pure patterns have zero cell energy") {
  for (int M : {2, 3}) {
    const auto& ep = testing::prototype(M);
    for (double ell : {-1.5, 0.0, 0.3333333333333333, 1.4}) {
      const auto set = minimizer_set_ell(ep, ell);
      if (set.regime != SetRegime::SingleK) continue;
      const EnergyModel model(ep, ell);
      for (const auto& m : set.members) {
        for (int blocks : {4, 8}) {
          const auto cfg = make_config(tile(m.z, blocks * M), M);
          for (int i = 0; i < cfg.n; ++i) CHECK(std::abs(cell_energy(model, cfg, i)) < 1e-10);
          CHECK(std::abs(total_renormalized_energy(model, cfg).value) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("constant slopes inside a J segment") {
  const auto& ep = testing::prototype(2);
  const EnergyModel model(ep, 0.5);
  const auto cfg = make_config(std::vector<double>(10, 0.5), 2);
  // direct evaluation: 0.25*0.25 + psi_1(0.5) - (0.25*0.5 - 0.0125) = 0.2
  const double expected = 0.0625 + 0.25 - (0.25 * 0.5 - 0.0125);
  for (int i = 0; i < cfg.n; ++i) CHECK(cell_energy(model, cfg, i) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.2));
  CHECK(total_renormalized_energy(model, cfg).value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("pattern switch at n = 40") {
  const auto& ep = testing::prototype(2);
  const EnergyModel model(ep, 0.0);
  std::vector<double> z(40);
  for (int i = 0; i < 40; ++i) z[static_cast<std::size_t>(i)] = (i < 20) == (i % 2 == 0) ? -1.0 : 1.0;
  const auto cfg = make_config(z, 2);
  CHECK(cfg.ell == 0.0);
  const auto e = total_renormalized_energy(model, cfg);
  const double direct = oracle::chain_energy(oracle::prototype(), 2, z, 0.0, 0.0);
  CHECK(e.value == doctest::Approx(direct).epsilon(1e-14));
  // two switch cells (1,1) and (-1,-1), each psi_M(+-1) = 0.25
  CHECK(e.value == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(e.discrepancy) < 1e-8 * 40);
}

TEST_CASE("unrenormalized energy examples") {
  const auto& ep = testing::prototype(2);
  auto cfg = make_config(std::vector<double>(16, 0.0), 2);
  CHECK(unrenormalized_energy(ep, cfg) == doctest::Approx(1.0).epsilon(1e-14));
  cfg = make_config(std::vector<double>(16, 0.7), 2, 2.0);
  const double psi1 = 0.3 * 0.3, psim = 0.25 * 0.49;
  CHECK(unrenormalized_energy(ep, cfg) == doctest::Approx(2.0 * (psi1 + psim)).epsilon(1e-13));
}

TEST_CASE("difference quotient identity and positivity on random configs") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int M : {2, 3}) {
    const auto& ep = testing::prototype(M);
    for (int trial = 0; trial < 60; ++trial) {
      const int n = M + static_cast<int>(rng() % 40);
      std::vector<double> z(static_cast<std::size_t>(n));
      for (auto& x : z) x = 0.3 * N(rng) + (rng() % 2 ? 1.0 : -1.0);
      const auto cfg = make_config(z, M, 1.0 + 0.5 * (trial % 3));
      const EnergyModel model(ep, cfg.ell);
      const auto rep = cell_report(model, cfg);
      for (double c : rep.cells) CHECK(c >= -1e-12);
      const auto e = total_renormalized_energy(model, cfg);
      CHECK(std::abs(e.value - rep.total) < 1e-12 * n);
      CHECK(std::abs(e.difference_quotient - e.value) < 1e-8 * n);
      const double eps = cfg.L / n;
      const double dq = (unrenormalized_energy(ep, cfg) - cfg.L * ep.convex_envelope(cfg.ell)) / eps;
      CHECK(std::abs(dq - e.value) < 1e-8 * n);
      CHECK(e.value == doctest::Approx(oracle::chain_energy(oracle::prototype(), M, z, model.tangent().slope,
                                                            model.tangent().intercept))
                           .epsilon(1e-10));
      // rotation by M bonds is a relabeling
      std::vector<double> r(z.begin() + M, z.end());
      r.insert(r.end(), z.begin(), z.begin() + M);
      CHECK(std::abs(total_renormalized_energy(model, make_config(r, M, cfg.L)).value - e.value) < 1e-10);
    }
  }
}

TEST_CASE("mean mismatch") {
  const auto& ep = testing::prototype(2);
  ChainConfig cfg = make_config({-1.0, 1.0, -1.0, 1.0}, 2);
  cfg.ell = 0.1;
  CHECK_THROWS_AS(check_mean(cfg), Error);
  const EnergyModel model(ep, 0.0);
  try {
    total_renormalized_energy(model, cfg);
    FAIL("expected MeanMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeanMismatch);
  }
}

TEST_CASE("config helpers") {
  const auto cfg = make_config({0.5, -0.5, 1.5}, 2, 3.0);
  CHECK(cfg.n == 3);
  CHECK(cfg.q() == 1);
  CHECK(cfg.eps() == 1.0);
  CHECK(cfg.ell == doctest::Approx(0.5));
  CHECK(cfg.slope(3) == 0.5);
  CHECK(cfg.slope(-1) == 1.5);
  const auto u = cfg.displacements();
  REQUIRE(u.size() >= 3);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == doctest::Approx(0.5));
  CHECK(u[2] == doctest::Approx(0.0));
}
