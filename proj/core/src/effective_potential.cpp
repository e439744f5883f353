#include "lrchain/effective_potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "lrchain/error.hpp"

namespace lrchain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
double toms748_root(F&& f, double lo, double hi) {
  std::uintmax_t iters = 300;
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 1);
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace

EffectivePotential::EffectivePotential(PotentialSpec spec, int M, EnvelopeOptions opts)
    : spec_(std::move(spec)), m_(M), opts_(opts) {
  if (M < 2) throw Error(ErrorCode::InvalidArgument, "M must be >= 2");
  if (!(opts_.grid_step > 0.0) || !(opts_.refine_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "grid step and refinement tolerance must be > 0");
  }
  envelope_ = build_envelope(*this, opts_);
}

std::optional<BranchSolution> EffectivePotential::try_branch(int j, double z) const {
  if (j < 0 || j > m_) throw Error(ErrorCode::InvalidArgument, "branch index out of range");
  const auto& dw = spec_.psi1;
  const auto& w1 = dw.w1();
  const auto& w2 = dw.w2();
  const double M = m_;
  BranchSolution out;
  out.j = j;
  out.z = z;

  auto in_region = [&](int which, double x) {
    for (const auto& iv : dw.region(which))
      if (iv.contains(x)) return true;
    return false;
  };

  if (j == 0 || j == m_) {
    const int which = j == 0 ? 2 : 1;
    if (!in_region(which, z)) return std::nullopt;
    out.z1 = out.z2 = z;
    out.value = M * dw.well(which).value(z);
    out.feasible = true;
    return out;
  }

  const double a = j;
  const double b = M - j;
  auto z2_of = [&](double z1) { return (M * z - a * z1) / b; };
  // Stationarity in the eliminated variable: increasing in z1.
  auto phi = [&](double z1) { return w1.derivative(z1) - w2.derivative(z2_of(z1)); };

  bool found = false;
  for (const auto& I : dw.region(1)) {
    for (const auto& J : dw.region(2)) {
      const double lo_from_z2 = (M * z - b * J.hi) / a;
      const double hi_from_z2 = (M * z - b * J.lo) / a;
      double lo = I.lo, hi = I.hi;
      auto lo_tag = BranchSolution::Active::Z1Clamped;
      auto hi_tag = BranchSolution::Active::Z1Clamped;
      if (lo_from_z2 > lo) {
        lo = lo_from_z2;
        lo_tag = BranchSolution::Active::Z2Clamped;
      }
      if (hi_from_z2 < hi) {
        hi = hi_from_z2;
        hi_tag = BranchSolution::Active::Z2Clamped;
      }
      if (lo > hi) continue;

      double z1 = 0.0;
      auto tag = BranchSolution::Active::None;
      if (phi(lo) >= 0.0) {
        z1 = lo;
        tag = lo_tag;
      } else if (phi(hi) <= 0.0) {
        z1 = hi;
        tag = hi_tag;
      } else {
        auto fdf = [&](double x) {
          return std::make_pair(phi(x), w1.second_derivative(x) + (a / b) * w2.second_derivative(z2_of(x)));
        };
        std::uintmax_t iters = 100;
        z1 = boost::math::tools::newton_raphson_iterate(fdf, 0.5 * (lo + hi), lo, hi,
                                                        std::numeric_limits<double>::digits - 2, iters);
      }
      // The stationary point uses the exact constraint, so only z2 is derived.
      double z2 = z2_of(z1);
      if (tag == BranchSolution::Active::Z2Clamped) z2 = (z1 == lo) ? J.hi : J.lo;
      const double value = a * w1.value(z1) + b * w2.value(z2);
      if (!found || value < out.value) {
        out.z1 = z1;
        out.z2 = z2;
        out.value = value;
        out.clamp = tag;
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;
  out.feasible = true;
  return out;
}

BranchSolution EffectivePotential::solve_branch(int j, double z) const {
  auto sol = try_branch(j, z);
  if (!sol) {
    std::ostringstream os;
    os << "branch j = " << j << " has no admissible slopes at z = " << z;
    throw Error(ErrorCode::InfeasibleBranch, os.str());
  }
  return *sol;
}

double EffectivePotential::branch_value(int j, double z) const {
  auto sol = try_branch(j, z);
  if (!sol) return kInf;
  return spec_.psi_m.value(z) + sol->value / m_;
}

double EffectivePotential::branch_derivative(int j, double z) const {
  auto sol = try_branch(j, z);
  if (!sol) return std::numeric_limits<double>::quiet_NaN();
  const auto& dw = spec_.psi1;
  double df;  // d f_j / dz divided by M
  if (j == 0) {
    df = dw.w2().derivative(z);
  } else if (j == m_) {
    df = dw.w1().derivative(z);
  } else if (sol->clamp == BranchSolution::Active::Z1Clamped) {
    df = dw.w2().derivative(sol->z2);
  } else {
    df = dw.w1().derivative(sol->z1);
  }
  return spec_.psi_m.derivative(z) + df;
}

std::pair<double, int> EffectivePotential::psi0_min(double z) const {
  double best = kInf;
  int arg = -1;
  for (int j = 0; j <= m_; ++j) {
    const double v = branch_value(j, z);
    if (v < best) {
      best = v;
      arg = j;
    }
  }
  return {best, arg};
}

Psi0Value EffectivePotential::psi0(double z) const {
  std::vector<double> values(m_ + 1);
  double best = kInf;
  for (int j = 0; j <= m_; ++j) {
    values[j] = branch_value(j, z);
    best = std::min(best, values[j]);
  }
  Psi0Value out;
  out.value = best;
  for (int j = 0; j <= m_; ++j)
    if (values[j] - best <= 1e-10) out.argmin.push_back(j);
  return out;
}

EnvelopeLocation EffectivePotential::locate(double z) const {
  const auto& env = envelope_;
  for (std::size_t s = 0; s < env.j.size(); ++s) {
    const auto& seg = env.j[s];
    if (z >= seg.z_left && z <= seg.z_right) {
      return {Regime::SegmentJ, static_cast<int>(s), z == seg.z_left || z == seg.z_right};
    }
  }
  for (std::size_t k = 0; k < env.k.size(); ++k) {
    if (z > env.k[k].left && z < env.k[k].right) return {Regime::InteriorK, static_cast<int>(k), false};
  }
  throw Error(ErrorCode::InvalidArgument, "slope outside the envelope structure");
}

double EffectivePotential::convex_envelope(double z) const {
  const auto loc = locate(z);
  if (loc.regime == Regime::SegmentJ) return envelope_.j[loc.index].line(z);
  return psi0_min(z).first;
}

double EffectivePotential::envelope_slope(double z, int side) const {
  const auto& env = envelope_;
  for (const auto& seg : env.j) {
    const bool inside = side < 0 ? (z > seg.z_left && z <= seg.z_right) : (z >= seg.z_left && z < seg.z_right);
    if (inside) return seg.slope;
  }
  for (const auto& k : env.k) {
    if (z >= k.left && z <= k.right) return branch_derivative(k.j, z);
  }
  throw Error(ErrorCode::InvalidArgument, "slope outside the envelope structure");
}

TangentLine EffectivePotential::tangent(double ell) const {
  const Interval range = spec_.psi1.range();
  if (!(ell > range.lo && ell < range.hi)) {
    throw Error(ErrorCode::InvalidArgument, "ell outside the working slope range");
  }
  const double left = envelope_slope(ell, -1);
  const double right = envelope_slope(ell, +1);
  if (!(std::abs(left - right) <= 1e-8)) {
    std::ostringstream os;
    os << "envelope slopes at ell = " << ell << " differ: " << left << " vs " << right;
    throw Error(ErrorCode::NonDifferentiable, os.str());
  }
  TangentLine t;
  t.ell = ell;
  const auto loc = locate(ell);
  if (loc.regime == Regime::SegmentJ) {
    const auto& seg = envelope_.j[loc.index];
    t.regime = Regime::SegmentJ;
    t.segment = loc.index;
    t.slope = seg.slope;
    t.intercept = seg.intercept;
    t.touching = {seg.z_left, seg.z_right};
  } else {
    const auto& k = envelope_.k[loc.index];
    t.regime = Regime::InteriorK;
    t.branch = k.j;
    t.slope = branch_derivative(k.j, ell);
    t.intercept = branch_value(k.j, ell) - t.slope * ell;
    t.touching = {ell};
  }
  return t;
}

std::vector<std::size_t> lower_convex_hull(std::span<const double> x, std::span<const double> y) {
  std::vector<std::size_t> hull;
  hull.reserve(64);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(y[k])) continue;
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross = (x[b] - x[a]) * (y[k] - y[a]) - (y[b] - y[a]) * (x[k] - x[a]);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(k);
  }
  return hull;
}

namespace {

/// z with psi_j-bar'(z) = s, searched outward from guess. If the branch
/// domain ends before the slope is reached the domain edge is returned.
double slope_point(const EffectivePotential& ep, int j, double s, double guess, double width) {
  auto g = [&](double z) { return ep.branch_derivative(j, z) - s; };
  const double g0 = g(guess);
  if (g0 == 0.0) return guess;
  const double dir = g0 < 0.0 ? 1.0 : -1.0;
  double inner = guess;
  double w = width;
  const Interval range = ep.potentials().psi1.range();
  for (int it = 0; it < 80; ++it) {
    const double outer = std::clamp(guess + dir * w, range.lo, range.hi);
    const double go = g(outer);
    if (std::isnan(go)) {
      // Left the branch domain: locate its edge by bisection.
      double ok = inner, bad = outer;
      for (int b = 0; b < 200 && std::abs(bad - ok) > 1e-15 * (1.0 + std::abs(ok)); ++b) {
        const double mid = 0.5 * (ok + bad);
        if (std::isnan(g(mid))) bad = mid; else ok = mid;
      }
      const double ge = g(ok);
      if ((ge < 0.0) == (g0 < 0.0)) return ok;
      return toms748_root(g, std::min(inner, ok), std::max(inner, ok));
    }
    if ((go < 0.0) != (g0 < 0.0) || go == 0.0) {
      if (go == 0.0) return outer;
      return toms748_root(g, std::min(inner, outer), std::max(inner, outer));
    }
    if (outer == range.lo || outer == range.hi) return outer;
    inner = outer;
    w *= 2.0;
  }
  throw Error(ErrorCode::DegenerateSegment, "slope search did not bracket");
}

struct Bitangent {
  double a, b, slope, intercept;
};

Bitangent refine_bitangent(const EffectivePotential& ep, int p, int q, double a0, double b0, double h) {
  double a = a0, b = b0;
  auto intercept_gap = [&](double s) {
    a = slope_point(ep, p, s, a, 2.0 * h);
    b = slope_point(ep, q, s, b, 2.0 * h);
    return (ep.branch_value(p, a) - s * a) - (ep.branch_value(q, b) - s * b);
  };
  const double s0 = (ep.branch_value(q, b0) - ep.branch_value(p, a0)) / (b0 - a0);
  // The gap is increasing in s with derivative b - a.
  double d = std::max(1e-6, 1e-3 * (1.0 + std::abs(s0)));
  double lo = s0 - d, hi = s0 + d;
  double glo = intercept_gap(lo);
  double ghi = intercept_gap(hi);
  for (int it = 0; it < 60 && glo > 0.0; ++it) {
    lo -= d;
    d *= 2.0;
    glo = intercept_gap(lo);
  }
  d = std::max(1e-6, 1e-3 * (1.0 + std::abs(s0)));
  for (int it = 0; it < 60 && ghi < 0.0; ++it) {
    hi += d;
    d *= 2.0;
    ghi = intercept_gap(hi);
  }
  if (glo > 0.0 || ghi < 0.0) throw Error(ErrorCode::DegenerateSegment, "bitangent slope not bracketed");
  a = a0;
  b = b0;
  const double s = toms748_root(intercept_gap, lo, hi);
  intercept_gap(s);
  const double c = ep.branch_value(p, a) - s * a;
  return {a, b, s, c};
}

}  // namespace

EnvelopeStructure build_envelope(const EffectivePotential& ep, const EnvelopeOptions& opts) {
  EnvelopeStructure env;
  const Interval range = ep.potentials().psi1.range();
  const double h = opts.grid_step;
  const auto count = static_cast<std::size_t>(std::floor(range.length() / h)) + 1;
  env.sampled = range;
  env.grid_step = h;

  std::vector<double> xs(count), fs(count);
  std::vector<int> branch(count);
  for (std::size_t k = 0; k < count; ++k) {
    xs[k] = range.lo + h * static_cast<double>(k);
    auto [v, j] = ep.psi0_min(xs[k]);
    fs[k] = v;
    branch[k] = j;
  }
  const auto hull = lower_convex_hull(xs, fs);

  double fscale = 1.0;
  for (double f : fs)
    if (std::isfinite(f)) fscale = std::max(fscale, std::abs(f));

  struct Gap {
    std::size_t ia, ib;
  };
  std::vector<Gap> gaps;
  for (std::size_t e = 0; e + 1 < hull.size(); ++e) {
    const std::size_t ia = hull[e], ib = hull[e + 1];
    if (branch[ia] != branch[ib]) {
      gaps.push_back({ia, ib});
      continue;
    }
    if (ib - ia < 2) continue;
    double dev = 0.0;
    const double slope = (fs[ib] - fs[ia]) / (xs[ib] - xs[ia]);
    for (std::size_t k = ia + 1; k < ib; ++k) {
      const double f = std::isfinite(fs[k]) ? fs[k] : fscale;
      dev = std::max(dev, f - (fs[ia] + slope * (xs[k] - xs[ia])));
    }
    if (dev > 1e-12 * fscale) gaps.push_back({ia, ib});
  }

  for (const auto& g : gaps) {
    const int p = branch[g.ia], q = branch[g.ib];
    if (p == q) {
      std::ostringstream os;
      os << "branch " << p << " is not convex near [" << xs[g.ia] << ", " << xs[g.ib] << "]";
      env.diagnostics.push_back(os.str());
    }
    const auto bt = refine_bitangent(ep, p, q, xs[g.ia], xs[g.ib], h);
    JSegment seg;
    seg.left_branch = p;
    seg.right_branch = q;
    seg.z_left = bt.a;
    seg.z_right = bt.b;
    seg.slope = bt.slope;
    seg.intercept = bt.intercept;
    seg.degenerate = !(bt.b - bt.a >= h);
    if (seg.degenerate) {
      std::ostringstream os;
      os << "DegenerateSegment: J between branches " << p << " and " << q << " has width "
         << (bt.b - bt.a) << " below the grid step";
      env.diagnostics.push_back(os.str());
    }
    env.j.push_back(seg);
  }

  if (env.j.empty()) {
    env.k.push_back({branch[count / 2], -kInf, kInf});
    return env;
  }
  env.k.push_back({env.j.front().left_branch, -kInf, env.j.front().z_left});
  for (std::size_t s = 1; s < env.j.size(); ++s) {
    const auto& prev = env.j[s - 1];
    const auto& next = env.j[s];
    if (prev.right_branch != next.left_branch) {
      std::ostringstream os;
      os << "K interval between segments " << (s - 1) << " and " << s << " mixes branches "
         << prev.right_branch << " and " << next.left_branch;
      env.diagnostics.push_back(os.str());
    }
    if (!(next.z_left > prev.z_right)) {
      std::ostringstream os;
      os << "DegenerateSegment: K_" << prev.right_branch << " collapsed between " << prev.z_right << " and "
         << next.z_left;
      env.diagnostics.push_back(os.str());
    }
    env.k.push_back({prev.right_branch, prev.z_right, next.z_left});
  }
  env.k.push_back({env.j.back().right_branch, env.j.back().z_right, kInf});
  return env;
}

}  // namespace lrchain
