#include "lrchain/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "lrchain/error.hpp"

namespace lrchain {

namespace {

double horner(const std::vector<double>& c, double z) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
  return acc;
}

std::vector<double> differentiate(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

template <class F>
double bracketed_root(F&& f, double lo, double hi) {
  std::uintmax_t iters = 200;
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 2);
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace

ConvexWell ConvexWell::quadratic(double center, double curvature) {
  if (!(curvature > 0.0) || !std::isfinite(center)) {
    throw Error(ErrorCode::InvalidArgument, "quadratic well needs finite center and curvature > 0");
  }
  ConvexWell w;
  w.kind_ = Kind::Quadratic;
  w.center_ = center;
  w.curvature_ = curvature;
  w.bottom_ = center;
  return w;
}

ConvexWell ConvexWell::polynomial(std::vector<double> coefficients) {
  while (coefficients.size() > 1 && coefficients.back() == 0.0) coefficients.pop_back();
  const std::size_t degree = coefficients.size() - 1;
  if (degree < 2 || degree % 2 != 0 || !(coefficients.back() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "polynomial well must have even degree >= 2 and positive leading coefficient");
  }
  ConvexWell w;
  w.kind_ = Kind::Polynomial;
  w.coeffs_ = std::move(coefficients);
  w.d1_ = differentiate(w.coeffs_);
  w.d2_ = differentiate(w.d1_);

  // W' is odd-degree with positive leading term: bracket its root by doubling.
  double lo = -1.0, hi = 1.0;
  while (horner(w.d1_, lo) > 0.0) lo *= 2.0;
  while (horner(w.d1_, hi) < 0.0) hi *= 2.0;
  w.bottom_ = bracketed_root([&](double z) { return horner(w.d1_, z); }, lo, hi);
  w.center_ = w.bottom_;
  w.curvature_ = 0.5 * horner(w.d2_, w.bottom_);
  return w;
}

double ConvexWell::value(double z) const {
  if (kind_ == Kind::Quadratic) {
    const double d = z - center_;
    return curvature_ * d * d;
  }
  return horner(coeffs_, z);
}

double ConvexWell::derivative(double z) const {
  if (kind_ == Kind::Quadratic) return 2.0 * curvature_ * (z - center_);
  return horner(d1_, z);
}

double ConvexWell::second_derivative(double z) const {
  if (kind_ == Kind::Quadratic) return 2.0 * curvature_;
  return horner(d2_, z);
}

double derivative(const ConvexWell& p, double z) { return p.derivative(z); }

DoubleWell::DoubleWell(ConvexWell w1, ConvexWell w2, std::optional<double> range_override)
    : w1_(std::move(w1)), w2_(std::move(w2)) {
  if (range_override) {
    if (!(*range_override > 0.0)) throw Error(ErrorCode::InvalidArgument, "working range must be > 0");
    range_ = *range_override;
  } else {
    range_ = 8.0 * (std::max(std::abs(w1_.bottom()), std::abs(w2_.bottom())) + 1.0);
  }
  build_regions();
}

Psi1Value DoubleWell::eval(double z) const {
  const double a = w1_.value(z);
  const double b = w2_.value(z);
  if (a <= b) return {a, 1};
  return {b, 2};
}

void DoubleWell::build_regions() {
  constexpr int kSamples = 20001;
  const double lo = -range_;
  const double h = 2.0 * range_ / (kSamples - 1);
  auto diff = [&](double z) { return w1_.value(z) - w2_.value(z); };

  std::vector<double> zs(kSamples), ds(kSamples);
  double scale = 0.0, worst = 0.0;
  for (int k = 0; k < kSamples; ++k) {
    zs[k] = lo + h * k;
    ds[k] = diff(zs[k]);
    scale = std::max(scale, std::abs(w1_.value(zs[k])) + std::abs(w2_.value(zs[k])));
    worst = std::max(worst, std::abs(ds[k]));
  }
  identical_ = worst <= 1e-14 * std::max(1.0, scale);
  crossings_.clear();
  a1_.clear();
  a2_.clear();
  if (identical_) {
    a1_.push_back(range());
    a2_.push_back(range());
    return;
  }

  for (int k = 0; k + 1 < kSamples; ++k) {
    if (ds[k] == 0.0) {
      // An exact zero is a crossing only if the sign actually changes across it.
      const double before = k > 0 ? ds[k - 1] : 0.0;
      const double after = ds[k + 1];
      if (before * after < 0.0) crossings_.push_back(zs[k]);
      continue;
    }
    if (ds[k] * ds[k + 1] < 0.0) crossings_.push_back(bracketed_root(diff, zs[k], zs[k + 1]));
  }
  std::sort(crossings_.begin(), crossings_.end());

  std::vector<double> cuts;
  cuts.push_back(lo);
  cuts.insert(cuts.end(), crossings_.begin(), crossings_.end());
  cuts.push_back(range_);
  auto push = [](std::vector<Interval>& set, Interval piece) {
    if (!set.empty() && set.back().hi >= piece.lo) {
      set.back().hi = std::max(set.back().hi, piece.hi);
    } else {
      set.push_back(piece);
    }
  };
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const Interval piece{cuts[p], cuts[p + 1]};
    const double mid = 0.5 * (piece.lo + piece.hi);
    if (diff(mid) <= 0.0) {
      push(a1_, piece);
    } else {
      push(a2_, piece);
    }
  }
}

std::vector<double> DoubleWell::crossing_points() const {
  if (!identical_ && crossings_.empty()) {
    throw Error(ErrorCode::NoCrossing, "one well lies strictly below the other on the working range");
  }
  return crossings_;
}

namespace {

template <class F>
CheckResult sample_second_difference(F&& f, Interval range, int samples) {
  CheckResult res{-std::numeric_limits<double>::infinity(), range.lo};
  const double h = range.length() / (samples - 1);
  for (int k = 1; k + 1 < samples; ++k) {
    const double z = range.lo + h * k;
    const double fm = f(z - h), f0 = f(z), fp = f(z + h);
    const double scale = std::abs(fm) + 2.0 * std::abs(f0) + std::abs(fp);
    // Relative to roundoff so that flat regions of large values do not flag.
    const double second = (fm - 2.0 * f0 + fp) - 1e-15 * scale;
    if (-second > res.worst) res = {-second, z};
  }
  return res;
}

}  // namespace

CheckResult check_convexity(const ConvexWell& w, Interval range, int samples) {
  auto res = sample_second_difference([&](double z) { return w.value(z); }, range, samples);
  if (w.kind() == ConvexWell::Kind::Quadratic) return res;
  // Polynomial: the analytic second derivative is the sharper test.
  const double h = range.length() / (samples - 1);
  for (int k = 0; k < samples; ++k) {
    const double z = range.lo + h * k;
    if (-w.second_derivative(z) > res.worst) res = {-w.second_derivative(z), z};
  }
  return res;
}

CheckResult check_strict_convexity(const ConvexWell& w, Interval range, int samples) {
  return sample_second_difference([&](double z) { return w.value(z); }, range, samples);
}

CheckResult check_growth(const ConvexWell& w, double c, Interval range, int samples) {
  CheckResult res{-std::numeric_limits<double>::infinity(), range.lo};
  const double h = range.length() / (samples - 1);
  for (int k = 0; k < samples; ++k) {
    const double z = range.lo + h * k;
    const double violation = c * z * z - 1.0 / c - w.value(z);
    if (violation > res.worst) res = {violation, z};
  }
  return res;
}

CheckResult check_superlinear(const DoubleWell& dw) {
  const double r = dw.range_half_width();
  auto ratio = [&](double z) { return dw.value(z) / std::abs(z); };
  const double right = ratio(r / 2) - ratio(r);
  const double left = ratio(-r / 2) - ratio(-r);
  return right >= left ? CheckResult{right, r} : CheckResult{left, -r};
}

void validate(const PotentialSpec& spec) {
  const Interval range = spec.psi1.range();
  auto fail = [](const std::string& field, const std::string& msg, double at) {
    std::ostringstream os;
    os << field << ": " << msg << " (at z = " << at << ")";
    throw Error(ErrorCode::InvalidArgument, os.str());
  };
  if (!(spec.growth_constant > 0.0)) fail("growth_constant", "must be > 0", 0.0);
  const char* names[2] = {"w1", "w2"};
  for (int which = 1; which <= 2; ++which) {
    const auto& w = spec.psi1.well(which);
    if (auto c = check_convexity(w, range); !c.ok(1e-12)) fail(names[which - 1], "not convex", c.at);
    if (auto g = check_growth(w, spec.growth_constant, range); !g.ok(1e-9)) {
      fail(names[which - 1], "violates W(z) >= c z^2 - 1/c for the declared growth constant", g.at);
    }
  }
  if (auto s = check_strict_convexity(spec.psi_m.well(), range); !(s.worst < 0.0)) {
    fail("psi_m", "not strictly convex", s.at);
  }
  if (auto s = check_superlinear(spec.psi1); !(s.worst < 0.0)) {
    fail("w1/w2", "psi_1(z)/|z| does not grow towards the range ends", s.at);
  }
}

}  // namespace lrchain
