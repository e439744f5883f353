#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lrchain/error.hpp"
#include "lrchain/lattice_energy.hpp"

namespace lrchain {

/// Well index (1 or 2) per bond, used cyclically.
using Assignment = std::vector<std::uint8_t>;

struct ConvexSolveResult {
  std::vector<double> slopes;
  double energy = 0.0;         // relaxed objective with W_sigma in place of psi_1
  double true_energy = 0.0;    // E^1 of the slopes
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Every slope lies in the region of its assigned well.
  bool consistent = false;
};

enum class Optimality { OracleCertified, Heuristic };

struct SolverTrace {
  long seeds = 0;
  long restarts = 0;
  long flips = 0;
  long convex_solves = 0;
  long local_solves = 0;
  long newton_iterations = 0;
};

struct SolveResult {
  ChainConfig config;
  double energy = 0.0;
  Assignment assignment;
  SolverTrace trace;
  Optimality optimality = Optimality::Heuristic;
  bool consistent = false;
};

struct SolverOptions {
  int random_restarts = 24;
  long budget = 2000000;  // convex solves
  bool anneal = false;
  long anneal_proposals = 2000;
  double anneal_temperature = 0.0;  // <= 0 picks one from the seed energy
  double cooling = 0.95;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Confirm with brute_force_oracle when n <= 16.
  bool certify = false;
};

/// Raised when the budget runs out; carries the best configuration found.
class BudgetExhaustedError : public Error {
 public:
  explicit BudgetExhaustedError(SolveResult best)
      : Error(ErrorCode::BudgetExhausted, "convex-solve budget exhausted"), best_(std::move(best)) {}
  const SolveResult& best() const { return best_; }

 private:
  SolveResult best_;
};

ConvexSolveResult convex_solve_given_assignment(const EnergyModel& model, int n, std::span<const std::uint8_t> sigma,
                                                std::span<const double> warm = {});

/// Exhaustive over all 2^n assignments, n <= 16.
SolveResult brute_force_oracle(const EnergyModel& model, int n);

/// Descent from one seed assignment (single flips and adjacent swaps).
SolveResult local_minimize(const EnergyModel& model, int n, const Assignment& seed, const SolverOptions& opts = {});

SolveResult global_minimize(const EnergyModel& model, int n, const SolverOptions& opts = {});

/// Seed assignments tried by global_minimize, in order (random seeds excluded).
std::vector<Assignment> structured_seeds(const EnergyModel& model, int n);

}  // namespace lrchain
