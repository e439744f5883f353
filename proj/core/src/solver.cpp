#include "lrchain/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <thread>

#include "cell_problem.hpp"
#include "lrchain/microstates.hpp"

namespace lrchain {

namespace {

detail::CellProblem chain_problem(const EnergyModel& model, int n) {
  if (n < model.M()) throw Error(ErrorCode::InvalidArgument, "need n >= M");
  detail::CellProblem p;
  p.spec = &model.potential().potentials();
  p.M = model.M();
  p.r_slope = model.tangent().slope;
  p.r_intercept = model.tangent().intercept;
  p.var.resize(n);
  for (int b = 0; b < n; ++b) p.var[b] = b;
  p.fixed.assign(n, 0.0);
  p.well.assign(n, 2);
  p.cells.reserve(static_cast<std::size_t>(n) * p.M);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < p.M; ++k) p.cells.push_back((i + k) % n);
  p.constrained = true;
  p.target_sum = n * model.ell();
  p.cyclic_vars = true;
  return p;
}

std::vector<double> bottoms(const EnergyModel& model, std::span<const std::uint8_t> sigma) {
  const auto& dw = model.potential().potentials().psi1;
  std::vector<double> x(sigma.size());
  for (std::size_t b = 0; b < sigma.size(); ++b) x[b] = dw.well(sigma[b]).bottom();
  return x;
}

bool is_consistent(const EnergyModel& model, std::span<const double> x, std::span<const std::uint8_t> sigma) {
  const auto& dw = model.potential().potentials().psi1;
  for (std::size_t b = 0; b < x.size(); ++b) {
    const auto w = sigma[b];
    if (dw.well(w).value(x[b]) > dw.value(x[b])) return false;
  }
  return true;
}

SolveResult to_result(const EnergyModel& model, const detail::SearchState& s, const detail::SearchStats& st) {
  SolveResult r;
  r.config.n = static_cast<int>(s.x.size());
  r.config.M = model.M();
  r.config.ell = model.ell();
  r.config.slopes = s.x;
  r.energy = 0.0;
  for (int i = 0; i < r.config.n; ++i) r.energy += model.cell_at(r.config.slopes, i);
  r.assignment = s.sigma;
  r.consistent = is_consistent(model, s.x, s.sigma);
  r.trace.convex_solves = st.solves;
  r.trace.local_solves = st.local_solves;
  r.trace.flips = st.flips;
  r.trace.newton_iterations = st.newton_iterations;
  return r;
}

bool better(const SolveResult& a, const SolveResult& b) {
  if (a.energy < b.energy - 1e-10) return true;
  if (std::abs(a.energy - b.energy) <= 1e-10) return detail::lex_less(a.assignment, b.assignment);
  return false;
}

detail::SearchState run_seed(detail::AssignmentSearch& search, const EnergyModel& model, const Assignment& seed,
                             const SolverOptions& opts, std::uint64_t rng_seed) {
  auto s = search.evaluate(seed, bottoms(model, seed));
  if (opts.anneal && opts.anneal_proposals > 0) {
    std::mt19937_64 rng(rng_seed);
    const double t0 = opts.anneal_temperature > 0.0
                          ? opts.anneal_temperature
                          : std::max(1e-6, s.value / std::max<std::size_t>(1, seed.size()));
    s = search.anneal(std::move(s), opts.anneal_proposals, t0, opts.cooling, rng);
  }
  for (int round = 0; round < 20; ++round) {
    s = search.descend(std::move(s));
    auto c = search.make_consistent(s);
    if (c.sigma == s.sigma) break;
    s = std::move(c);
  }
  return s;
}

Assignment tile(std::span<const std::uint8_t> pattern, int n) {
  Assignment a(n);
  for (int b = 0; b < n; ++b) a[b] = pattern[b % pattern.size()];
  return a;
}

Assignment well_pattern(const EnergyModel& model, std::span<const double> z) {
  const auto& dw = model.potential().potentials().psi1;
  Assignment p(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) p[k] = static_cast<std::uint8_t>(dw.active_well(z[k]));
  return p;
}

}  // namespace

ConvexSolveResult convex_solve_given_assignment(const EnergyModel& model, int n, std::span<const std::uint8_t> sigma,
                                                std::span<const double> warm) {
  if (static_cast<int>(sigma.size()) != n) throw Error(ErrorCode::InvalidArgument, "assignment length must equal n");
  for (auto w : sigma)
    if (w != 1 && w != 2) throw Error(ErrorCode::InvalidArgument, "assignment entries must be 1 or 2");
  auto p = chain_problem(model, n);
  for (int b = 0; b < n; ++b) p.well[b] = sigma[b];
  p.finalize();
  detail::NewtonSolver solver;
  std::vector<double> x0 = warm.empty() ? bottoms(model, sigma) : std::vector<double>(warm.begin(), warm.end());
  auto r = solver.solve(p, x0);
  ConvexSolveResult out;
  out.energy = r.value;
  out.grad_norm = r.grad_norm;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.true_energy = 0.0;
  for (int i = 0; i < n; ++i) out.true_energy += model.cell_at(r.x, i);
  out.consistent = is_consistent(model, r.x, sigma);
  out.slopes = std::move(r.x);
  return out;
}

SolveResult brute_force_oracle(const EnergyModel& model, int n) {
  if (n > 16) throw Error(ErrorCode::InvalidArgument, "brute_force_oracle requires n <= 16");
  detail::AssignmentSearch search(chain_problem(model, n));
  auto s = search.exhaustive();
  auto r = to_result(model, s, search.stats());
  r.trace.seeds = 1;
  r.optimality = Optimality::OracleCertified;
  return r;
}

SolveResult local_minimize(const EnergyModel& model, int n, const Assignment& seed, const SolverOptions& opts) {
  if (static_cast<int>(seed.size()) != n) throw Error(ErrorCode::InvalidArgument, "seed length must equal n");
  detail::AssignmentSearch search(chain_problem(model, n));
  search.set_budget(opts.budget);
  try {
    auto s = run_seed(search, model, seed, opts, opts.seed);
    auto r = to_result(model, s, search.stats());
    r.trace.seeds = 1;
    return r;
  } catch (const detail::BudgetOut&) {
    auto s = search.evaluate(seed, bottoms(model, seed));
    throw BudgetExhaustedError(to_result(model, s, search.stats()));
  }
}

std::vector<Assignment> structured_seeds(const EnergyModel& model, int n) {
  const int M = model.M();
  std::vector<Assignment> seeds;
  auto add = [&](Assignment a) {
    if (std::find(seeds.begin(), seeds.end(), a) == seeds.end()) seeds.push_back(std::move(a));
  };
  const auto& ep = model.potential();
  const auto set = minimizer_set_ell(ep, model.ell());
  for (const auto& m : set.members) add(tile(well_pattern(model, m.z), n));

  if (set.regime == SetRegime::SegmentUnion) {
    const auto& seg = ep.envelope().j[ep.locate(model.ell()).index];
    const double width = seg.z_right - seg.z_left;
    const double lambda = width > 0.0 ? (seg.z_right - model.ell()) / width : 0.5;
    std::vector<const Microstate*> left, right;
    for (const auto& m : set.members) (std::abs(m.alpha - seg.z_left) <= 1e-12 ? left : right).push_back(&m);
    const double target = lambda * n;
    std::vector<int> splits = {static_cast<int>(std::floor(target / M)) * M,
                               static_cast<int>(std::floor(target / M)) * M + M,
                               static_cast<int>(std::lround(target))};
    int pairs = 0;
    for (const auto* a : left) {
      for (const auto* b : right) {
        if (++pairs > 64) break;
        const auto pa = well_pattern(model, a->z);
        const auto pb = well_pattern(model, b->z);
        for (int nl : splits) {
          if (nl <= 0 || nl >= n) continue;
          Assignment s(n);
          for (int k = 0; k < n; ++k) s[k] = k < nl ? pa[k % M] : pb[k % M];
          add(std::move(s));
        }
      }
    }
  }
  add(Assignment(n, 1));
  add(Assignment(n, 2));
  return seeds;
}

SolveResult global_minimize(const EnergyModel& model, int n, const SolverOptions& opts) {
  auto seeds = structured_seeds(model, n);
  const std::size_t structured = seeds.size();
  std::mt19937_64 rng(opts.seed);
  for (int r = 0; r < opts.random_restarts; ++r) {
    Assignment a(n);
    for (int b = 0; b < n; ++b) a[b] = static_cast<std::uint8_t>(1 + (rng() & 1u));
    seeds.push_back(std::move(a));
  }

  const auto base = chain_problem(model, n);
  const long share = std::max<long>(1, opts.budget / static_cast<long>(seeds.size()));
  std::vector<std::optional<SolveResult>> results(seeds.size());
  std::vector<char> exhausted(seeds.size(), 0);

  auto work = [&](std::size_t idx) {
    detail::AssignmentSearch search(base);
    search.set_budget(share);
    try {
      auto s = run_seed(search, model, seeds[idx], opts, opts.seed ^ (0x9e3779b97f4a7c15ull * (idx + 1)));
      results[idx] = to_result(model, s, search.stats());
    } catch (const detail::BudgetOut&) {
      exhausted[idx] = 1;
      search.set_budget(-1);
      auto s = search.evaluate(seeds[idx], bottoms(model, seeds[idx]));
      results[idx] = to_result(model, s, search.stats());
    }
  };

  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(seeds.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < seeds.size(); i += threads) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  SolveResult best = *results[0];
  SolverTrace total;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = *results[i];
    total.convex_solves += r.trace.convex_solves;
    total.local_solves += r.trace.local_solves;
    total.flips += r.trace.flips;
    total.newton_iterations += r.trace.newton_iterations;
    if (i > 0 && better(r, best)) best = r;
  }
  total.seeds = static_cast<long>(structured);
  total.restarts = opts.random_restarts;
  best.trace = total;
  best.optimality = Optimality::Heuristic;

  if (std::any_of(exhausted.begin(), exhausted.end(), [](char c) { return c != 0; })) {
    throw BudgetExhaustedError(best);
  }

  if (opts.certify && n <= 16) {
    auto oracle = brute_force_oracle(model, n);
    if (oracle.energy < best.energy - 1e-10) {
      oracle.trace.seeds = total.seeds;
      oracle.trace.restarts = total.restarts;
      oracle.trace.convex_solves += total.convex_solves;
      best = std::move(oracle);
    }
    best.optimality = Optimality::OracleCertified;
  }
  return best;
}

}  // namespace lrchain
