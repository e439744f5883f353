#include "cell_problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lrchain/error.hpp"

namespace lrchain::detail {

void CellProblem::finalize() {
  const int nb = static_cast<int>(var.size());
  num_vars = 0;
  for (int b = 0; b < nb; ++b)
    if (var[b] >= 0) num_vars = std::max(num_vars, var[b] + 1);
  bond_of_var.assign(num_vars, -1);
  for (int b = 0; b < nb; ++b)
    if (var[b] >= 0) bond_of_var[var[b]] = b;
  cells_of_var.assign(num_vars, {});
  for (int c = 0; c < num_cells(); ++c) {
    for (int k = 0; k < M; ++k) {
      const int v = var[cells[c * M + k]];
      if (v >= 0 && (cells_of_var[v].empty() || cells_of_var[v].back() != c)) cells_of_var[v].push_back(c);
    }
  }
  if (fixed.size() < var.size()) fixed.resize(var.size(), 0.0);
  if (well.size() < var.size()) well.resize(var.size(), 0);
}

double bond_energy(const CellProblem& p, int bond, double z) {
  const auto w = p.well[bond];
  if (w == 0) return p.spec->psi1.value(z);
  return p.spec->psi1.well(w).value(z);
}

namespace {

inline double bond_slope(const CellProblem& p, int b, std::span<const double> x) {
  const int v = p.var[b];
  return v >= 0 ? x[v] : p.fixed[b];
}

}  // namespace

double cell_value(const CellProblem& p, int c, std::span<const double> x) {
  const int M = p.M;
  double s = 0.0, w = 0.0;
  for (int k = 0; k < M; ++k) {
    const int b = p.cells[c * M + k];
    const double z = bond_slope(p, b, x);
    s += z;
    w += bond_energy(p, b, z);
  }
  const double m = s / M;
  return p.spec->psi_m.value(m) - (p.r_intercept + p.r_slope * m) + w / M;
}

double objective(const CellProblem& p, std::span<const double> x) {
  double f = 0.0;
  for (int c = 0; c < p.num_cells(); ++c) f += cell_value(p, c, x);
  return f;
}

struct NewtonSolver::Impl {
  Eigen::MatrixXd H;
  Eigen::VectorXd g, d, w, ones, xv;
  Eigen::LLT<Eigen::MatrixXd> llt;

  Eigen::SparseMatrix<double> S;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> pattern_cells;
  std::vector<int> pattern_var;
  bool analyzed = false;

  std::vector<double> diag;
};

NewtonSolver::NewtonSolver(NewtonOptions opts) : opts_(opts), impl_(new Impl) {}
NewtonSolver::~NewtonSolver() { delete impl_; }

NewtonResult NewtonSolver::solve(const CellProblem& p, std::span<const double> x0) {
  const int nv = p.num_vars;
  const int M = p.M;
  NewtonResult res;
  res.x.assign(x0.begin(), x0.end());
  if (nv == 0) {
    res.value = objective(p, res.x);
    res.converged = true;
    return res;
  }
  auto& I = *impl_;
  const bool dense = nv <= opts_.dense_limit;
  auto& x = res.x;
  if (p.constrained) {
    double s = 0.0;
    for (double v : x) s += v;
    const double shift = (p.target_sum - s) / nv;
    for (double& v : x) v += shift;
  }

  I.g.resize(nv);
  I.ones.setOnes(nv);
  I.diag.assign(nv, 0.0);
  if (dense) {
    I.H.resize(nv, nv);
  } else if (!I.analyzed || I.pattern_cells != p.cells || I.pattern_var != p.var) {
    I.analyzed = false;
    I.pattern_cells = p.cells;
    I.pattern_var = p.var;
  }

  // Value, gradient and Hessian at x.
  auto assemble = [&](bool with_hessian) {
    double f = 0.0;
    I.g.setZero();
    if (with_hessian) {
      if (dense) I.H.setZero();
      I.trip.clear();
      std::fill(I.diag.begin(), I.diag.end(), 0.0);
    }
    int vars[64];
    for (int c = 0; c < p.num_cells(); ++c) {
      double s = 0.0, wsum = 0.0;
      int nf = 0;
      for (int k = 0; k < M; ++k) {
        const int b = p.cells[c * M + k];
        const double z = bond_slope(p, b, x);
        s += z;
        wsum += bond_energy(p, b, z);
      }
      const double m = s / M;
      const auto& pm = p.spec->psi_m;
      f += pm.value(m) - (p.r_intercept + p.r_slope * m) + wsum / M;
      const double dm = (pm.derivative(m) - p.r_slope) / M;
      const double hm = pm.second_derivative(m) / (static_cast<double>(M) * M);
      for (int k = 0; k < M; ++k) {
        const int b = p.cells[c * M + k];
        const int v = p.var[b];
        if (v < 0) continue;
        const auto& well = p.spec->psi1.well(p.well[b]);
        I.g[v] += dm + well.derivative(x[v]) / M;
        if (with_hessian) {
          I.diag[v] += well.second_derivative(x[v]) / M;
          if (nf < 64) vars[nf++] = v;
        }
      }
      if (with_hessian) {
        for (int a = 0; a < nf; ++a)
          for (int b = 0; b < nf; ++b) {
            if (dense) {
              I.H(vars[a], vars[b]) += hm;
            } else {
              I.trip.emplace_back(vars[a], vars[b], hm);
            }
          }
      }
    }
    if (with_hessian) {
      for (int v = 0; v < nv; ++v) {
        if (dense) {
          I.H(v, v) += I.diag[v];
        } else {
          I.trip.emplace_back(v, v, I.diag[v]);
        }
      }
    }
    return f;
  };

  auto projected_norm = [&]() {
    if (!p.constrained) return I.g.norm();
    const double mean = I.g.sum() / nv;
    return (I.g.array() - mean).matrix().norm();
  };

  // Factorizes H (+ lambda I on failure) and solves for d and w.
  auto newton_direction = [&]() {
    double lambda = 0.0;
    double scale = 1.0;
    for (double v : I.diag) scale = std::max(scale, std::abs(v));
    for (int attempt = 0; attempt < 8; ++attempt) {
      bool ok = false;
      if (dense) {
        Eigen::MatrixXd Hd = I.H;
        if (lambda > 0.0) Hd.diagonal().array() += lambda;
        I.llt.compute(Hd);
        ok = I.llt.info() == Eigen::Success;
        if (ok) {
          I.d = I.llt.solve(-I.g);
          if (p.constrained) I.w = I.llt.solve(I.ones);
        }
      } else {
        I.S.resize(nv, nv);
        std::vector<Eigen::Triplet<double>> t = I.trip;
        if (lambda > 0.0)
          for (int v = 0; v < nv; ++v) t.emplace_back(v, v, lambda);
        I.S.setFromTriplets(t.begin(), t.end());
        if (!I.analyzed) {
          I.ldlt.analyzePattern(I.S);
          I.analyzed = true;
        }
        I.ldlt.factorize(I.S);
        ok = I.ldlt.info() == Eigen::Success && I.ldlt.vectorD().minCoeff() > 0.0;
        if (ok) {
          I.d = I.ldlt.solve(-I.g);
          if (p.constrained) I.w = I.ldlt.solve(I.ones);
        }
      }
      if (ok && I.d.allFinite()) {
        if (p.constrained) I.d -= I.w * (I.d.sum() / I.w.sum());
        return;
      }
      lambda = lambda == 0.0 ? 1e-10 * scale : lambda * 100.0;
    }
    throw Error(ErrorCode::SingularSystem, "projected Hessian is numerically singular");
  };

  std::vector<double> trial(nv);
  double f = assemble(true);
  for (int it = 0; it < opts_.max_iterations; ++it) {
    res.grad_norm = projected_norm();
    res.iterations = it;
    if (res.grad_norm < opts_.grad_tol) {
      res.converged = true;
      break;
    }
    newton_direction();
    const double slope = I.g.dot(I.d);
    if (!(slope < 0.0)) break;
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (int v = 0; v < nv; ++v) trial[v] = x[v] + t * I.d[v];
      const double ft = objective(p, trial);
      if (ft <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // roundoff floor
    x.swap(trial);
    f = assemble(true);
    res.iterations = it + 1;
  }
  res.grad_norm = projected_norm();
  res.converged = res.converged || res.grad_norm < opts_.grad_tol;
  res.value = objective(p, x);
  return res;
}

bool lex_less(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

AssignmentSearch::AssignmentSearch(CellProblem base, NewtonOptions opts)
    : p_(std::move(base)), opts_(opts), solver_(opts), local_solver_(opts) {
  p_.finalize();
}

void AssignmentSearch::spend() {
  if (budget_ < 0) return;
  if (budget_ == 0) throw BudgetOut{};
  --budget_;
}

SearchState AssignmentSearch::evaluate(std::vector<std::uint8_t> sigma, std::span<const double> warm) {
  spend();
  for (int v = 0; v < p_.num_vars; ++v) p_.well[p_.bond_of_var[v]] = sigma[v];
  auto r = solver_.solve(p_, warm);
  ++stats_.solves;
  stats_.newton_iterations += r.iterations;
  SearchState s;
  s.sigma = std::move(sigma);
  s.x = std::move(r.x);
  s.value = r.value;
  s.converged = r.converged;
  return s;
}

std::vector<double> AssignmentSearch::cell_values(const SearchState& s) {
  for (int v = 0; v < p_.num_vars; ++v) p_.well[p_.bond_of_var[v]] = s.sigma[v];
  std::vector<double> out(p_.num_cells());
  for (int c = 0; c < p_.num_cells(); ++c) out[c] = cell_value(p_, c, s.x);
  return out;
}

int AssignmentSearch::neighbour(int v, int step) const {
  const int w = v + step;
  if (w >= 0 && w < p_.num_vars) return w;
  if (!p_.cyclic_vars) return -1;
  return ((w % p_.num_vars) + p_.num_vars) % p_.num_vars;
}

double AssignmentSearch::local_gain(const SearchState& s, std::span<const int> vars,
                                    const std::vector<std::uint8_t>& sigma) {
  const int radius = std::max(8, 4 * p_.M);
  std::vector<int> window;
  for (int v : vars)
    for (int k = -radius; k <= radius; ++k) {
      const int w = neighbour(v, k);
      if (w >= 0) window.push_back(w);
    }
  std::sort(window.begin(), window.end());
  window.erase(std::unique(window.begin(), window.end()), window.end());

  std::vector<int> local_cells;
  for (int v : window) local_cells.insert(local_cells.end(), p_.cells_of_var[v].begin(), p_.cells_of_var[v].end());
  std::sort(local_cells.begin(), local_cells.end());
  local_cells.erase(std::unique(local_cells.begin(), local_cells.end()), local_cells.end());

  CellProblem q;
  q.spec = p_.spec;
  q.M = p_.M;
  q.r_slope = p_.r_slope;
  q.r_intercept = p_.r_intercept;
  std::vector<int> local_var_of(p_.num_vars, -1);
  for (std::size_t k = 0; k < window.size(); ++k) local_var_of[window[k]] = static_cast<int>(k);
  std::vector<int> bond_map;  // global bond -> local bond, built lazily
  std::vector<std::pair<int, int>> seen;
  double sum = 0.0;
  std::vector<double> x0(window.size());
  for (std::size_t k = 0; k < window.size(); ++k) {
    x0[k] = s.x[window[k]];
    sum += x0[k];
  }
  auto local_bond = [&](int b) {
    for (const auto& [g, l] : seen)
      if (g == b) return l;
    const int l = static_cast<int>(q.var.size());
    seen.emplace_back(b, l);
    const int v = p_.var[b];
    if (v >= 0 && local_var_of[v] >= 0) {
      q.var.push_back(local_var_of[v]);
      q.fixed.push_back(0.0);
      q.well.push_back(s.sigma[v]);
    } else if (v >= 0) {
      q.var.push_back(-1);
      q.fixed.push_back(s.x[v]);
      q.well.push_back(s.sigma[v]);
    } else {
      q.var.push_back(-1);
      q.fixed.push_back(p_.fixed[b]);
      q.well.push_back(p_.well[b]);
    }
    return l;
  };
  for (int c : local_cells)
    for (int k = 0; k < p_.M; ++k) q.cells.push_back(local_bond(p_.cells[c * p_.M + k]));
  q.constrained = p_.constrained;
  q.target_sum = sum;
  q.finalize();

  const double before = objective(q, x0);
  for (std::size_t k = 0; k < window.size(); ++k) {
    const int b = q.bond_of_var[k];
    q.well[b] = sigma[window[k]];
  }
  auto r = local_solver_.solve(q, x0);
  ++stats_.local_solves;
  return before - r.value;
}

bool AssignmentSearch::try_move(SearchState& s, std::span<const int> vars) {
  auto sigma = s.sigma;
  for (int v : vars) sigma[v] = static_cast<std::uint8_t>(3 - sigma[v]);
  if (p_.num_vars > opts_.dense_limit && local_gain(s, vars, sigma) <= 1e-12) return false;
  auto cand = evaluate(std::move(sigma), s.x);
  if (cand.value < s.value - 1e-12) {
    s = std::move(cand);
    ++stats_.flips;
    return true;
  }
  return false;
}

SearchState AssignmentSearch::descend(SearchState s) {
  for (int sweep = 0; sweep < 100000; ++sweep) {
    const auto cv = cell_values(s);
    std::vector<char> mark(p_.num_vars, 0);
    for (int c = 0; c < p_.num_cells(); ++c) {
      if (cv[c] <= 1e-12) continue;
      for (int k = 0; k < p_.M; ++k) {
        const int v = p_.var[p_.cells[c * p_.M + k]];
        if (v >= 0) mark[v] = 1;
      }
    }
    bool improved = false;
    for (int v = 0; v < p_.num_vars; ++v) {
      if (!mark[v]) continue;
      const int one[1] = {v};
      if (try_move(s, one)) improved = true;
      const int w = neighbour(v, 1);
      if (w >= 0 && w != v && s.sigma[v] != s.sigma[w]) {
        const int two[2] = {v, w};
        if (try_move(s, two)) improved = true;
      }
    }
    if (!improved) break;
  }
  return s;
}

SearchState AssignmentSearch::make_consistent(SearchState s) {
  const auto& dw = p_.spec->psi1;
  for (int round = 0; round < 50; ++round) {
    auto sigma = s.sigma;
    for (int v = 0; v < p_.num_vars; ++v) sigma[v] = static_cast<std::uint8_t>(dw.active_well(s.x[v]));
    if (sigma == s.sigma) break;
    auto next = evaluate(std::move(sigma), s.x);
    if (next.value > s.value + 1e-12) break;
    s = std::move(next);
  }
  return s;
}

SearchState AssignmentSearch::anneal(SearchState s, long proposals, double t0, double cooling,
                                     std::mt19937_64& rng) {
  if (p_.num_vars == 0) return s;
  std::uniform_int_distribution<int> pick(0, p_.num_vars - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SearchState best = s;
  double T = t0;
  for (long k = 0; k < proposals; ++k) {
    auto sigma = s.sigma;
    const int v = pick(rng);
    sigma[v] = static_cast<std::uint8_t>(3 - sigma[v]);
    auto cand = evaluate(std::move(sigma), s.x);
    const double delta = cand.value - s.value;
    if (delta < 0.0 || (T > 0.0 && unit(rng) < std::exp(-delta / T))) {
      s = std::move(cand);
      if (s.value < best.value - 1e-12) best = s;
    }
    if ((k + 1) % p_.num_vars == 0) T *= cooling;
  }
  return best;
}

SearchState AssignmentSearch::exhaustive() {
  const int nv = p_.num_vars;
  if (nv > 30) throw Error(ErrorCode::InvalidArgument, "exhaustive search limited to 30 free bonds");
  std::vector<std::uint8_t> sigma(nv, 2);
  std::vector<double> warm(nv, 0.0);
  {
    const double start = p_.constrained ? p_.target_sum / std::max(nv, 1) : 0.0;
    std::fill(warm.begin(), warm.end(), start);
  }
  SearchState best = evaluate(sigma, warm);
  warm = best.x;
  const unsigned long total = 1ul << nv;
  for (unsigned long i = 1; i < total; ++i) {
    // Gray code: toggle the lowest set bit position of i.
    const int bit = __builtin_ctzl(i);
    sigma[bit] = static_cast<std::uint8_t>(3 - sigma[bit]);
    auto cand = evaluate(sigma, warm);
    warm = cand.x;
    if (cand.value < best.value - 1e-10 ||
        (std::abs(cand.value - best.value) <= 1e-10 && lex_less(cand.sigma, best.sigma))) {
      best = std::move(cand);
    }
  }
  return best;
}

}  // namespace lrchain::detail
