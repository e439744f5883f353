#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrchain/potentials.hpp"

namespace lrchain {

/// Minimizer of the reduced two-slope problem for a fixed well count j:
///   min j W1(z1) + (M-j) W2(z2)  s.t.  j z1 + (M-j) z2 = M z, z1 in A1, z2 in A2.
struct BranchSolution {
  enum class Active { None, Z1Clamped, Z2Clamped };

  int j = 0;
  double z = 0.0;
  double z1 = 0.0;
  double z2 = 0.0;
  double value = 0.0;  // f_j(z), not divided by M
  bool feasible = false;
  Active clamp = Active::None;
};

struct Psi0Value {
  double value = 0.0;
  std::vector<int> argmin;  // every j within 1e-10 of the minimum
};

struct EnvelopeOptions {
  double grid_step = 1e-4;
  double refine_tol = 1e-10;
};

/// Strict-branch interval K_j on which the envelope coincides with psi_j-bar.
/// The outermost intervals are unbounded.
struct KInterval {
  int j = 0;
  double left = -std::numeric_limits<double>::infinity();
  double right = std::numeric_limits<double>::infinity();
};

/// Affine part of the envelope joining branch left_branch at z_left to
/// branch right_branch at z_right (z_left < z_right).
struct JSegment {
  int left_branch = 0;
  int right_branch = 0;
  double z_left = 0.0;
  double z_right = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  bool degenerate = false;

  double line(double z) const { return intercept + slope * z; }
};

/// Ordered left to right: k[0], j[0], k[1], ..., j[m-1], k[m].
struct EnvelopeStructure {
  std::vector<KInterval> k;
  std::vector<JSegment> j;
  std::vector<std::string> diagnostics;
  Interval sampled;
  double grid_step = 0.0;
};

enum class Regime { InteriorK, SegmentJ };

struct EnvelopeLocation {
  Regime regime = Regime::InteriorK;
  int index = 0;  // into EnvelopeStructure::k or ::j
  bool at_endpoint = false;
};

/// The affine function r_ell touching the envelope at ell.
struct TangentLine {
  double ell = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  Regime regime = Regime::InteriorK;
  int branch = -1;   // K regime
  int segment = -1;  // J regime
  std::vector<double> touching;

  double operator()(double z) const { return intercept + slope * z; }
};

/// psi_0 and its convex envelope for a fixed range M. Immutable once built.
class EffectivePotential {
 public:
  EffectivePotential(PotentialSpec spec, int M, EnvelopeOptions opts = {});

  int M() const { return m_; }
  const PotentialSpec& potentials() const { return spec_; }
  const EnvelopeOptions& options() const { return opts_; }

  /// Throws Error(InfeasibleBranch) if the region constraints cannot meet
  /// the average constraint.
  BranchSolution solve_branch(int j, double z) const;
  std::optional<BranchSolution> try_branch(int j, double z) const;

  /// psi_j-bar(z) = psi_M(z) + f_j(z)/M, +inf when infeasible.
  double branch_value(int j, double z) const;
  double branch_derivative(int j, double z) const;

  Psi0Value psi0(double z) const;
  /// Cheaper form returning the value and the lowest optimal j.
  std::pair<double, int> psi0_min(double z) const;

  const EnvelopeStructure& envelope() const { return envelope_; }
  double convex_envelope(double z) const;
  /// One-sided derivative of the envelope; side < 0 is from the left.
  double envelope_slope(double z, int side) const;
  EnvelopeLocation locate(double z) const;

  /// Throws Error(NonDifferentiable) when the one-sided envelope slopes at
  /// ell differ by more than 1e-8.
  TangentLine tangent(double ell) const;

 private:
  PotentialSpec spec_;
  int m_;
  EnvelopeOptions opts_;
  EnvelopeStructure envelope_;
};

/// Indices of the lower convex hull of the points (x[k], y[k]), x increasing.
std::vector<std::size_t> lower_convex_hull(std::span<const double> x, std::span<const double> y);

/// Sample-hull-then-refine construction used by EffectivePotential.
EnvelopeStructure build_envelope(const EffectivePotential& ep, const EnvelopeOptions& opts);

}  // namespace lrchain
