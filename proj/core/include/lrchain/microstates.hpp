#pragma once

#include <span>
#include <vector>

#include "lrchain/effective_potential.hpp"

namespace lrchain {

/// An M-tuple of slopes minimizing the cell problem at average alpha.
struct Microstate {
  std::vector<double> z;
  double alpha = 0.0;
  int j = 0;         // entries sitting in well 1
  int orbit = 0;     // index of its cyclic orbit within the owning set
  int rotation = 0;  // q with cyclic_shift(canonical, q) == z

  int M() const { return static_cast<int>(z.size()); }
};

enum class SetRegime { SingleK, SegmentUnion };

struct MicrostateSet {
  double alpha = 0.0;  // alpha, or ell for minimizer_set_ell
  SetRegime regime = SetRegime::SingleK;
  /// alpha sits on a K endpoint where several branches are optimal.
  bool boundary_case = false;
  std::vector<Microstate> members;

  std::size_t size() const { return members.size(); }
};

/// Slope tolerance for "entry equals z1/z2" and set membership.
inline constexpr double kMembershipTol = 1e-8;

/// All arrangements of the optimal branch solutions of (P) at alpha,
/// lexicographically ordered.
MicrostateSet minimizer_set_alpha(const EffectivePotential& ep, double alpha);

/// M_ell: minimizer_set_alpha inside a K interval, the union of the two
/// endpoint sets on a J segment.
MicrostateSet minimizer_set_ell(const EffectivePotential& ep, double ell);

/// u_z(i): prefix sums of the M-periodic slope sequence, u_z(0) = 0.
double profile_u_z(std::span<const double> z, long i);

/// sigma_q(z_1..z_M) = (z_{M+1-q}, ..., z_M, z_1, ..., z_{M-q}).
std::vector<double> cyclic_shift(std::span<const double> z, int q);
Microstate cyclic_shift(const Microstate& m, int q);

/// Lexicographically smallest rotation of z.
std::vector<double> canonical_rotation(std::span<const double> z);

/// Index of the member equal to z within tol (max norm), or -1.
int find_member(const MicrostateSet& set, std::span<const double> z, double tol = kMembershipTol);

/// Euclidean distance between two tuples of equal length.
double tuple_distance(std::span<const double> a, std::span<const double> b);

/// Half of the smallest pairwise distance between members. For a
/// single-member set, half the distance between the two well bottoms.
double classification_radius(const EffectivePotential& ep, const MicrostateSet& set);

}  // namespace lrchain
