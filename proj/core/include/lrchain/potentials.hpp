#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace lrchain {

/// Closed interval [lo, hi] of slopes.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double z) const { return z >= lo && z <= hi; }
  double length() const { return hi - lo; }
};

/// A convex C^2 well. Two kinds are supported: the quadratic
/// k (z - c)^2 and an even-degree polynomial with positive leading
/// coefficient whose convexity is checked over the working range.
class ConvexWell {
 public:
  enum class Kind { Quadratic, Polynomial };

  static ConvexWell quadratic(double center, double curvature);
  /// Coefficients in increasing degree: c[0] + c[1] z + ... + c[d] z^d.
  static ConvexWell polynomial(std::vector<double> coefficients);

  Kind kind() const { return kind_; }
  double center() const { return center_; }
  double curvature() const { return curvature_; }
  const std::vector<double>& coefficients() const { return coeffs_; }

  double value(double z) const;
  double derivative(double z) const;
  double second_derivative(double z) const;

  /// Location of the minimum (the well bottom).
  double bottom() const { return bottom_; }

 private:
  ConvexWell() = default;

  Kind kind_ = Kind::Quadratic;
  double center_ = 0.0;
  double curvature_ = 1.0;
  std::vector<double> coeffs_;
  std::vector<double> d1_;
  std::vector<double> d2_;
  double bottom_ = 0.0;
};

struct Psi1Value {
  double value = 0.0;
  int active_well = 1;  // 1 or 2, ties go to well 1
};

/// psi_1 = min{W1, W2}. Holds the working slope range and the region
/// structure A1 = {psi_1 = W1}, A2 = {psi_1 = W2} restricted to it.
class DoubleWell {
 public:
  /// range_override: half-width R of the working range. Defaults to
  /// 8 * (max |well bottom| + 1).
  DoubleWell(ConvexWell w1, ConvexWell w2, std::optional<double> range_override = std::nullopt);

  const ConvexWell& w1() const { return w1_; }
  const ConvexWell& w2() const { return w2_; }
  const ConvexWell& well(int which) const { return which == 1 ? w1_ : w2_; }

  Psi1Value eval(double z) const;
  double value(double z) const { return eval(z).value; }
  int active_well(double z) const { return eval(z).active_well; }

  /// Sign changes of W1 - W2 on the working range, sorted. Throws
  /// Error(NoCrossing) when one well lies strictly below the other.
  std::vector<double> crossing_points() const;

  Interval range() const { return {-range_, range_}; }
  double range_half_width() const { return range_; }

  /// Disjoint sorted intervals composing A1 (resp. A2) inside the range.
  const std::vector<Interval>& region(int which) const { return which == 1 ? a1_ : a2_; }
  bool identical_wells() const { return identical_; }

 private:
  void build_regions();

  ConvexWell w1_;
  ConvexWell w2_;
  double range_ = 0.0;
  std::vector<double> crossings_;
  std::vector<Interval> a1_;
  std::vector<Interval> a2_;
  bool identical_ = false;
};

/// Strictly convex M-th neighbour potential psi_M.
class LongRangePotential {
 public:
  explicit LongRangePotential(ConvexWell well) : well_(std::move(well)) {}

  const ConvexWell& well() const { return well_; }
  double value(double z) const { return well_.value(z); }
  double derivative(double z) const { return well_.derivative(z); }
  double second_derivative(double z) const { return well_.second_derivative(z); }

 private:
  ConvexWell well_;
};

struct PotentialSpec {
  DoubleWell psi1;
  LongRangePotential psi_m;
  double growth_constant = 0.5;
};

/// Analytic first derivative of a well.
double derivative(const ConvexWell& p, double z);

// Sampled checks used by config validation and tests. Each returns the
// worst violation found (<= 0 means satisfied) together with its location.
struct CheckResult {
  double worst = 0.0;
  double at = 0.0;
  bool ok(double tol) const { return worst <= tol; }
};

/// min over equally spaced triples of the second difference, negated.
CheckResult check_convexity(const ConvexWell& w, Interval range, int samples = 4001);
/// max of c z^2 - 1/c - W(z) over the grid.
CheckResult check_growth(const ConvexWell& w, double c, Interval range, int samples = 4001);
/// Negated min second difference; strictly convex means worst < 0.
CheckResult check_strict_convexity(const ConvexWell& w, Interval range, int samples = 4001);
/// psi_1(z)/|z| must grow near both ends of the range: reports the bound
/// psi_1(z)/|z| evaluated at +-R minus its value at +-R/2 (negated).
CheckResult check_superlinear(const DoubleWell& dw);

/// Fails with a descriptive Error(InvalidArgument) when the potential pair
/// violates convexity, strict convexity of psi_M, or the growth bound.
void validate(const PotentialSpec& spec);

}  // namespace lrchain
