#include "lrchain/transition.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cell_problem.hpp"
#include "lrchain/microstates.hpp"

namespace lrchain {

namespace {

int mod(long a, int m) { return static_cast<int>(((a % m) + m) % m); }

void require_member(const MicrostateSet& set, std::span<const double> z, const char* which) {
  if (find_member(set, z) < 0) {
    throw Error(ErrorCode::NotInMinimizerSet, std::string(which) + " tuple is not a member of M_ell");
  }
}

struct Window {
  detail::CellProblem problem;
  int N = 0;
  int M = 0;
  int first_bond = 0;  // bond index of local bond 0
};

Window build_window(const EnergyModel& model, const TransitionQuery& q) {
  const int M = model.M();
  const int N = q.N;
  Window w;
  w.N = N;
  w.M = M;
  w.first_bond = -N - M + 1;
  auto& p = w.problem;
  p.spec = &model.potential().potentials();
  p.M = M;
  p.r_slope = model.tangent().slope;
  p.r_intercept = model.tangent().intercept;
  const int last_bond = N + M - 2;
  for (int b = w.first_bond; b <= last_bond; ++b) {
    if (b < -N) {
      p.var.push_back(-1);
      p.fixed.push_back(q.z_left[mod(b, M)]);
    } else if (b >= N) {
      p.var.push_back(-1);
      p.fixed.push_back(q.z_right[mod(b, M)]);
    } else {
      p.var.push_back(b + N);
      p.fixed.push_back(0.0);
    }
    p.well.push_back(0);
  }
  for (int i = -N - M + 1; i <= N - 1; ++i)
    for (int k = 0; k < M; ++k) p.cells.push_back(i + k - w.first_bond);
  if (q.xi) {
    p.constrained = true;
    p.target_sum = profile_u_z(q.z_right, N) + *q.xi - profile_u_z(q.z_left, -N);
  }
  p.finalize();
  return w;
}

Assignment pattern_wells(const EnergyModel& model, std::span<const double> z) {
  const auto& dw = model.potential().potentials().psi1;
  Assignment a(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) a[k] = static_cast<std::uint8_t>(dw.active_well(z[k]));
  return a;
}

double true_value(const detail::CellProblem& p, std::span<const double> x) {
  detail::CellProblem t = p;
  for (int v = 0; v < t.num_vars; ++v) t.well[t.bond_of_var[v]] = 0;
  return detail::objective(t, x);
}

detail::SearchState polish(detail::AssignmentSearch& search, detail::SearchState s) {
  for (int round = 0; round < 20; ++round) {
    s = search.descend(std::move(s));
    auto c = search.make_consistent(s);
    if (c.sigma == s.sigma) break;
    s = std::move(c);
  }
  return s;
}

}  // namespace

WindowResult phi_window(const EnergyModel& model, const TransitionQuery& query, const TransitionOptions& opts,
                        const WindowResult* previous) {
  const int M = model.M();
  if (static_cast<int>(query.z_left.size()) != M || static_cast<int>(query.z_right.size()) != M) {
    throw Error(ErrorCode::InvalidArgument, "far-field tuples must have M entries");
  }
  if (query.N < M) throw Error(ErrorCode::InvalidArgument, "window half-size N must be >= M");
  const auto set = minimizer_set_ell(model.potential(), model.ell());
  require_member(set, query.z_left, "left");
  require_member(set, query.z_right, "right");

  const int N = query.N;
  auto win = build_window(model, query);
  const int nv = win.problem.num_vars;
  detail::AssignmentSearch search(win.problem);
  search.set_budget(opts.budget);

  const auto pl = pattern_wells(model, query.z_left);
  const auto pr = pattern_wells(model, query.z_right);

  detail::SearchState best;
  bool have = false;
  auto offer = [&](detail::SearchState s) {
    if (!have || s.value < best.value - 1e-12 ||
        (std::abs(s.value - best.value) <= 1e-12 && detail::lex_less(s.sigma, best.sigma))) {
      best = std::move(s);
      have = true;
    }
  };

  bool exhaustive = nv <= opts.exhaustive_limit;
  try {
    if (exhaustive) {
      offer(search.exhaustive());
    } else {
      auto splice = [&](int s, Assignment& sigma, std::vector<double>& x) {
        sigma.resize(nv);
        x.resize(nv);
        for (int b = -N; b < N; ++b) {
          const bool left = b < s;
          sigma[b + N] = left ? pl[mod(b, M)] : pr[mod(b, M)];
          x[b + N] = left ? query.z_left[mod(b, M)] : query.z_right[mod(b, M)];
        }
      };
      detail::SearchState best_splice;
      bool have_splice = false;
      for (int s = -M; s <= M; ++s) {
        Assignment sigma;
        std::vector<double> x;
        splice(s, sigma, x);
        auto st = polish(search, search.evaluate(std::move(sigma), x));
        if (!have_splice || st.value < best_splice.value - 1e-12) {
          best_splice = st;
          have_splice = true;
        }
        offer(std::move(st));
      }
      if (previous && previous->N < N && previous->N >= M) {
        Assignment sigma;
        std::vector<double> x;
        splice(0, sigma, x);
        const int Np = previous->N;
        for (int b = -Np; b < Np; ++b) {
          sigma[b + N] = previous->assignment[b + Np];
          x[b + N] = previous->slopes[b + Np];
        }
        // With pinned xi the embedded profile already meets the sum constraint.
        offer(polish(search, search.evaluate(std::move(sigma), x)));
      }
      std::mt19937_64 rng(opts.seed ^ (0x2545f4914f6cdd1dull * static_cast<std::uint64_t>(N)));
      const int core = 2 * M;
      for (int r = 0; r < opts.random_restarts; ++r) {
        auto sigma = best_splice.sigma;
        for (int b = -core; b < core; ++b)
          if (rng() & 1u) sigma[b + N] = static_cast<std::uint8_t>(3 - sigma[b + N]);
        offer(polish(search, search.evaluate(std::move(sigma), best_splice.x)));
      }
    }
  } catch (const detail::BudgetOut&) {
    throw Error(ErrorCode::BudgetExhausted, "transition window search exhausted its budget");
  }

  WindowResult out;
  out.N = N;
  out.exhaustive = exhaustive;
  out.slopes = best.x;
  out.assignment = best.sigma;
  out.value = true_value(search.problem(), best.x);
  out.convex_solves = search.stats().solves;
  out.u.resize(2 * N + 1);
  out.u[0] = profile_u_z(query.z_left, -N);
  for (int k = 0; k < 2 * N; ++k) out.u[k + 1] = out.u[k] + best.x[k];
  out.xi = out.u[2 * N] - profile_u_z(query.z_right, N);
  return out;
}

TransitionResult phi_converged(const EnergyModel& model, std::span<const double> z_left,
                               std::span<const double> z_right, const TransitionOptions& opts) {
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be > 0");
  const int M = model.M();
  TransitionResult res;
  TransitionQuery q;
  q.z_left.assign(z_left.begin(), z_left.end());
  q.z_right.assign(z_right.begin(), z_right.end());
  const int n0 = opts.n0_factor * M;
  const int nmax = opts.nmax_factor * M;
  WindowResult prev;
  bool have_prev = false;
  for (int N = n0; N <= nmax; N *= 2) {
    q.N = N;
    auto w = phi_window(model, q, opts, have_prev ? &prev : nullptr);
    if (have_prev && w.value > prev.value + 1e-10) {
      ++res.monotonicity_violations;
      std::ostringstream os;
      os.precision(17);
      os << "value increased from " << prev.value << " at N = " << prev.N << " to " << w.value << " at N = " << N;
      res.diagnostics.push_back(os.str());
    }
    res.N.push_back(N);
    res.values.push_back(w.value);
    const bool settled = have_prev && std::abs(w.value - prev.value) < opts.tol;
    prev = std::move(w);
    have_prev = true;
    if (settled) {
      res.converged = true;
      break;
    }
  }
  res.value = res.values.back();
  res.window = prev;
  res.converged_at = res.N.back();
  for (std::size_t k = 0; k < res.values.size(); ++k) {
    if (std::abs(res.values[k] - res.value) < opts.tol) {
      res.converged_at = res.N[k];
      break;
    }
  }
  if (!res.converged) throw NoConvergenceError(res);
  return res;
}

std::vector<TripleCheck> subadditivity(std::span<const double> table, int members, double slack) {
  std::vector<TripleCheck> out;
  for (int a = 0; a < members; ++a)
    for (int b = 0; b < members; ++b)
      for (int c = 0; c < members; ++c) {
        TripleCheck t;
        t.a = a;
        t.b = b;
        t.c = c;
        t.lhs = table[a * members + c];
        t.rhs = table[a * members + b] + table[b * members + c];
        t.holds = t.lhs <= t.rhs + slack;
        out.push_back(t);
      }
  return out;
}

std::vector<double> phi_table(const EnergyModel& model, const TransitionOptions& opts) {
  const auto set = minimizer_set_ell(model.potential(), model.ell());
  const int k = static_cast<int>(set.size());
  std::vector<double> table(static_cast<std::size_t>(k) * k, 0.0);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) table[a * k + b] = phi_converged(model, set.members[a].z, set.members[b].z, opts).value;
  return table;
}

InvarianceReport invariance_suite(const EnergyModel& model, std::span<const double> z, std::span<const double> z_prime,
                                  const TransitionOptions& opts) {
  const int M = model.M();
  InvarianceReport rep;
  const auto base = phi_converged(model, z, z_prime, opts);
  rep.phi = base.value;
  rep.N = base.window.N;

  rep.cyclic_ok = true;
  for (int q = 0; q < M; ++q) {
    const auto a = cyclic_shift(z, q);
    const auto b = cyclic_shift(z_prime, q);
    CyclicCheck c;
    c.q = q;
    c.value = q == 0 ? base.value : phi_converged(model, a, b, opts).value;
    c.difference = std::abs(c.value - base.value);
    rep.max_cyclic_difference = std::max(rep.max_cyclic_difference, c.difference);
    rep.cyclic_ok = rep.cyclic_ok && c.difference < 1e-8;
    rep.cyclic.push_back(c);
  }

  rep.offsets_ok = true;
  for (double xi : {-1.0, 0.0, 1.0}) {
    TransitionQuery q;
    q.z_left.assign(z.begin(), z.end());
    q.z_right.assign(z_prime.begin(), z_prime.end());
    q.N = rep.N;
    q.xi = xi;
    OffsetCheck o;
    o.xi = xi;
    o.value = phi_window(model, q, opts, &base.window).value;
    o.difference = std::abs(o.value - base.value);
    rep.max_offset_difference = std::max(rep.max_offset_difference, o.difference);
    rep.offsets_ok = rep.offsets_ok && o.difference < 1e-6;
    rep.offsets.push_back(o);
  }

  const auto set = minimizer_set_ell(model.potential(), model.ell());
  rep.subadditive = true;
  const double phi_ab = base.value;
  for (std::size_t c = 0; c < set.size(); ++c) {
    const auto& zc = set.members[c].z;
    TripleCheck t;
    t.a = find_member(set, z);
    t.b = find_member(set, z_prime);
    t.c = static_cast<int>(c);
    t.lhs = phi_converged(model, z, zc, opts).value;
    t.rhs = phi_ab + phi_converged(model, z_prime, zc, opts).value;
    t.holds = t.lhs <= t.rhs + 1e-8;
    rep.subadditive = rep.subadditive && t.holds;
    rep.triples.push_back(t);
  }
  return rep;
}

}  // namespace lrchain
