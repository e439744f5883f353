#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrchain/error.hpp"
#include "lrchain/lattice_energy.hpp"
#include "lrchain/solver.hpp"

namespace lrchain {

struct TransitionOptions {
  int exhaustive_limit = 16;  // free bonds
  int random_restarts = 20;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int n0_factor = 4;     // N0 = n0_factor * M
  int nmax_factor = 512; // N_max = nmax_factor * M
  long budget = 20000000;
};

struct TransitionQuery {
  std::vector<double> z_left;
  std::vector<double> z_right;
  int N = 0;
  /// Offset of the right far field; free when empty.
  std::optional<double> xi;
};

struct WindowResult {
  int N = 0;
  double value = 0.0;
  std::vector<double> slopes;  // free bonds -N..N-1
  Assignment assignment;
  std::vector<double> u;       // u_i for i = -N..N (unit lattice spacing)
  double xi = 0.0;
  bool exhaustive = false;
  long convex_solves = 0;
};

struct TransitionResult {
  std::vector<int> N;
  std::vector<double> values;
  double value = 0.0;
  bool converged = false;
  int converged_at = 0;  // first N within tol of the final value
  WindowResult window;
  std::vector<std::string> diagnostics;
  int monotonicity_violations = 0;
};

class NoConvergenceError : public Error {
 public:
  explicit NoConvergenceError(TransitionResult partial)
      : Error(ErrorCode::NoConvergence, "transition energy did not settle before N_max"),
        partial_(std::move(partial)) {}
  const TransitionResult& partial() const { return partial_; }

 private:
  TransitionResult partial_;
};

/// Throws Error(NotInMinimizerSet) unless both tuples belong to M_ell.
WindowResult phi_window(const EnergyModel& model, const TransitionQuery& query, const TransitionOptions& opts = {},
                        const WindowResult* previous = nullptr);

/// N = N0, 2 N0, ... until successive values differ by less than opts.tol.
TransitionResult phi_converged(const EnergyModel& model, std::span<const double> z_left,
                               std::span<const double> z_right, const TransitionOptions& opts = {});

struct CyclicCheck {
  int q = 0;
  double value = 0.0;
  double difference = 0.0;
};

struct OffsetCheck {
  double xi = 0.0;
  double value = 0.0;
  double difference = 0.0;
};

struct TripleCheck {
  int a = 0, b = 0, c = 0;  // member indices
  double lhs = 0.0;         // Phi(a, c)
  double rhs = 0.0;         // Phi(a, b) + Phi(b, c)
  bool holds = false;
};

struct InvarianceReport {
  double phi = 0.0;
  int N = 0;
  std::vector<CyclicCheck> cyclic;
  std::vector<OffsetCheck> offsets;
  std::vector<TripleCheck> triples;
  double max_cyclic_difference = 0.0;
  double max_offset_difference = 0.0;
  bool cyclic_ok = false;
  bool offsets_ok = false;
  bool subadditive = false;
};

/// Cyclic invariance over all q, pinned offsets xi in {-1, 0, 1} at the
/// converged window, and subadditivity over (z, z', z'') for z'' in M_ell.
InvarianceReport invariance_suite(const EnergyModel& model, std::span<const double> z, std::span<const double> z_prime,
                                  const TransitionOptions& opts = {});

/// Phi for every ordered pair of members of M_ell, row-major.
std::vector<double> phi_table(const EnergyModel& model, const TransitionOptions& opts = {});

/// Checks Phi(a,c) <= Phi(a,b) + Phi(b,c) + slack on every triple of a table.
std::vector<TripleCheck> subadditivity(std::span<const double> table, int members, double slack = 1e-8);

}  // namespace lrchain
