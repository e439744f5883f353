#include <benchmark/benchmark.h>

#include "lrchain/effective_potential.hpp"
#include "lrchain/solver.hpp"
#include "lrchain/transition.hpp"
#include "lrchain/microstates.hpp"

namespace {

lrchain::PotentialSpec prototype() {
  using lrchain::ConvexWell;
  return {lrchain::DoubleWell(ConvexWell::quadratic(-1.0, 1.0), ConvexWell::quadratic(1.0, 1.0)),
          lrchain::LongRangePotential(ConvexWell::quadratic(0.0, 0.25)), 0.5};
}

void BM_Envelope(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  for (auto _ : state) {
    lrchain::EffectivePotential ep(prototype(), M);
    benchmark::DoNotOptimize(ep.envelope().j.size());
  }
}
BENCHMARK(BM_Envelope)->Arg(2)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_ConvexSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  static const lrchain::EffectivePotential ep(prototype(), 2);
  const lrchain::EnergyModel model(ep, 0.5);
  lrchain::Assignment sigma(static_cast<std::size_t>(n), 2);
  for (int i = 0; i < n / 4; ++i) sigma[static_cast<std::size_t>(2 * i)] = 1;
  for (auto _ : state) {
    auto r = lrchain::convex_solve_given_assignment(model, n, sigma);
    benchmark::DoNotOptimize(r.energy);
  }
}
BENCHMARK(BM_ConvexSolve)->Arg(16)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_BruteForce(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  static const lrchain::EffectivePotential ep(prototype(), 2);
  const lrchain::EnergyModel model(ep, 0.3);
  for (auto _ : state) {
    auto r = lrchain::brute_force_oracle(model, n);
    benchmark::DoNotOptimize(r.energy);
  }
}
BENCHMARK(BM_BruteForce)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_GlobalMinimize(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  static const lrchain::EffectivePotential ep(prototype(), 2);
  const lrchain::EnergyModel model(ep, 0.5);
  for (auto _ : state) {
    auto r = lrchain::global_minimize(model, n);
    benchmark::DoNotOptimize(r.energy);
  }
}
BENCHMARK(BM_GlobalMinimize)->Arg(60)->Arg(240)->Unit(benchmark::kMillisecond);

void BM_PhiConverged(benchmark::State& state) {
  static const lrchain::EffectivePotential ep(prototype(), 2);
  const lrchain::EnergyModel model(ep, 0.0);
  const auto set = lrchain::minimizer_set_ell(ep, 0.0);
  for (auto _ : state) {
    auto r = lrchain::phi_converged(model, set.members[0].z, set.members[1].z);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_PhiConverged)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
