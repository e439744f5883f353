#pragma once

// Energy of a family of M-bond cells over free and fixed bonds, with each free
// bond assigned to one well. Shared by the periodic solver and the transition
// window.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lrchain/potentials.hpp"

namespace lrchain::detail {

struct CellProblem {
  const PotentialSpec* spec = nullptr;
  int M = 2;
  double r_slope = 0.0;
  double r_intercept = 0.0;

  // Per bond.
  std::vector<int> var;               // variable index, -1 when fixed
  std::vector<double> fixed;          // value of fixed bonds
  std::vector<std::uint8_t> well;     // 0 = psi_1, 1 = W1, 2 = W2

  std::vector<int> cells;             // M bond indices per cell
  bool constrained = false;
  double target_sum = 0.0;
  bool cyclic_vars = false;           // variable v+1 follows v, wrapping

  // Filled by finalize().
  int num_vars = 0;
  std::vector<int> bond_of_var;
  std::vector<std::vector<int>> cells_of_var;

  int num_cells() const { return static_cast<int>(cells.size()) / M; }
  void finalize();
};

double bond_energy(const CellProblem& p, int bond, double z);
double cell_value(const CellProblem& p, int c, std::span<const double> x);
double objective(const CellProblem& p, std::span<const double> x);

struct NewtonOptions {
  double grad_tol = 1e-10;
  int max_iterations = 100;
  int dense_limit = 64;
};

struct NewtonResult {
  std::vector<double> x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Equality-constrained damped Newton. Reuses its factorization workspace
/// across calls on problems with the same cell structure.
class NewtonSolver {
 public:
  explicit NewtonSolver(NewtonOptions opts = {});
  ~NewtonSolver();
  NewtonSolver(const NewtonSolver&) = delete;
  NewtonSolver& operator=(const NewtonSolver&) = delete;

  NewtonResult solve(const CellProblem& p, std::span<const double> x0);

 private:
  struct Impl;
  NewtonOptions opts_;
  Impl* impl_;
};

struct SearchStats {
  long solves = 0;
  long local_solves = 0;
  long flips = 0;
  long newton_iterations = 0;
};

struct SearchState {
  std::vector<std::uint8_t> sigma;  // per variable
  std::vector<double> x;
  double value = 0.0;
  bool converged = true;
};

/// Thrown by AssignmentSearch when the convex-solve budget runs out.
struct BudgetOut {};

class AssignmentSearch {
 public:
  AssignmentSearch(CellProblem base, NewtonOptions opts = {});

  const CellProblem& problem() const { return p_; }
  SearchStats& stats() { return stats_; }

  void set_budget(long budget) { budget_ = budget; }
  long budget() const { return budget_; }

  SearchState evaluate(std::vector<std::uint8_t> sigma, std::span<const double> warm);
  /// Single flips and adjacent swaps near nonzero cells until no move improves
  /// by more than 1e-12.
  SearchState descend(SearchState s);
  /// Replaces sigma by the active wells of x and re-solves until stable.
  SearchState make_consistent(SearchState s);
  SearchState anneal(SearchState s, long proposals, double t0, double cooling, std::mt19937_64& rng);
  /// All 2^num_vars assignments in Gray-code order; ties within 1e-10 go to
  /// the lexicographically smallest sigma.
  SearchState exhaustive();

  std::vector<double> cell_values(const SearchState& s);

 private:
  void spend();
  bool try_move(SearchState& s, std::span<const int> vars);
  double local_gain(const SearchState& s, std::span<const int> vars, const std::vector<std::uint8_t>& sigma);
  int neighbour(int v, int step) const;

  CellProblem p_;
  NewtonOptions opts_;
  NewtonSolver solver_;
  NewtonSolver local_solver_;
  SearchStats stats_;
  long budget_ = -1;
};

bool lex_less(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

}  // namespace lrchain::detail
