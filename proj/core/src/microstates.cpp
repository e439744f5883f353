#include "lrchain/microstates.hpp"

#include <algorithm>
#include <cmath>

#include "lrchain/error.hpp"

namespace lrchain {

namespace {

bool same_tuple(std::span<const double> a, std::span<const double> b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k] - b[k]) > tol) return false;
  return true;
}

/// Every M-tuple with j entries equal to z1 and the rest equal to z2.
void append_arrangements(std::vector<Microstate>& out, int M, int j, double z1, double z2, double alpha) {
  std::vector<bool> pick(M, false);
  std::fill(pick.begin(), pick.begin() + j, true);
  // prev_permutation over a sorted-descending mask enumerates every subset once.
  do {
    Microstate m;
    m.z.resize(M);
    for (int k = 0; k < M; ++k) m.z[k] = pick[k] ? z1 : z2;
    m.alpha = alpha;
    m.j = j;
    out.push_back(std::move(m));
  } while (std::prev_permutation(pick.begin(), pick.end()));
}

void finalize(MicrostateSet& set) {
  auto& mem = set.members;
  std::stable_sort(mem.begin(), mem.end(), [](const Microstate& a, const Microstate& b) {
    return std::lexicographical_compare(a.z.begin(), a.z.end(), b.z.begin(), b.z.end());
  });
  std::vector<Microstate> unique;
  for (auto& m : mem) {
    const bool dup = std::any_of(unique.begin(), unique.end(),
                                 [&](const Microstate& u) { return same_tuple(u.z, m.z, kMembershipTol); });
    if (!dup) unique.push_back(std::move(m));
  }
  mem = std::move(unique);

  std::vector<std::vector<double>> orbit_reps;
  for (auto& m : mem) {
    const auto canon = canonical_rotation(m.z);
    auto it = std::find_if(orbit_reps.begin(), orbit_reps.end(),
                           [&](const std::vector<double>& r) { return same_tuple(r, canon, kMembershipTol); });
    if (it == orbit_reps.end()) {
      orbit_reps.push_back(canon);
      it = orbit_reps.end() - 1;
    }
    m.orbit = static_cast<int>(it - orbit_reps.begin());
    for (int q = 0; q < m.M(); ++q) {
      if (same_tuple(cyclic_shift(*it, q), m.z, kMembershipTol)) {
        m.rotation = q;
        break;
      }
    }
  }
}

}  // namespace

MicrostateSet minimizer_set_alpha(const EffectivePotential& ep, double alpha) {
  MicrostateSet set;
  set.alpha = alpha;
  set.regime = SetRegime::SingleK;
  const auto p0 = ep.psi0(alpha);
  set.boundary_case = p0.argmin.size() > 1;
  for (int j : p0.argmin) {
    const auto sol = ep.solve_branch(j, alpha);
    append_arrangements(set.members, ep.M(), j, sol.z1, sol.z2, alpha);
  }
  finalize(set);
  return set;
}

MicrostateSet minimizer_set_ell(const EffectivePotential& ep, double ell) {
  const auto loc = ep.locate(ell);
  if (loc.regime == Regime::InteriorK) return minimizer_set_alpha(ep, ell);

  const auto& seg = ep.envelope().j[loc.index];
  MicrostateSet set;
  set.alpha = ell;
  set.regime = SetRegime::SegmentUnion;
  set.boundary_case = loc.at_endpoint;
  const auto left = ep.solve_branch(seg.left_branch, seg.z_left);
  const auto right = ep.solve_branch(seg.right_branch, seg.z_right);
  append_arrangements(set.members, ep.M(), seg.left_branch, left.z1, left.z2, seg.z_left);
  append_arrangements(set.members, ep.M(), seg.right_branch, right.z1, right.z2, seg.z_right);
  finalize(set);
  return set;
}

double profile_u_z(std::span<const double> z, long i) {
  const long M = static_cast<long>(z.size());
  if (M == 0) throw Error(ErrorCode::InvalidArgument, "empty microstate");
  double period = 0.0;
  for (double v : z) period += v;
  // u(i) = floor(i/M) * sum(z) + partial sum of the first (i mod M) entries.
  long blocks = i / M;
  long rem = i % M;
  if (rem < 0) {
    rem += M;
    blocks -= 1;
  }
  double u = static_cast<double>(blocks) * period;
  for (long k = 0; k < rem; ++k) u += z[k];
  return u;
}

std::vector<double> cyclic_shift(std::span<const double> z, int q) {
  const int M = static_cast<int>(z.size());
  if (q < 0 || q >= std::max(M, 1)) throw Error(ErrorCode::InvalidArgument, "shift must satisfy 0 <= q < M");
  std::vector<double> out(M);
  for (int k = 0; k < M; ++k) out[k] = z[((k - q) % M + M) % M];
  return out;
}

Microstate cyclic_shift(const Microstate& m, int q) {
  Microstate out = m;
  out.z = cyclic_shift(m.z, q);
  out.rotation = (m.rotation + q) % m.M();
  return out;
}

std::vector<double> canonical_rotation(std::span<const double> z) {
  std::vector<double> best(z.begin(), z.end());
  for (int q = 1; q < static_cast<int>(z.size()); ++q) {
    auto r = cyclic_shift(z, q);
    if (std::lexicographical_compare(r.begin(), r.end(), best.begin(), best.end())) best = std::move(r);
  }
  return best;
}

int find_member(const MicrostateSet& set, std::span<const double> z, double tol) {
  for (std::size_t k = 0; k < set.members.size(); ++k)
    if (same_tuple(set.members[k].z, z, tol)) return static_cast<int>(k);
  return -1;
}

double tuple_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double classification_radius(const EffectivePotential& ep, const MicrostateSet& set) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < set.members.size(); ++a)
    for (std::size_t b = a + 1; b < set.members.size(); ++b)
      best = std::min(best, tuple_distance(set.members[a].z, set.members[b].z));
  if (!std::isfinite(best)) {
    const auto& dw = ep.potentials().psi1;
    best = std::abs(dw.w1().bottom() - dw.w2().bottom());
  }
  return 0.5 * best;
}

}  // namespace lrchain
