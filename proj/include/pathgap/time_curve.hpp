#pragma once

#include <functional>
#include <vector>

namespace pathgap {

/// A continuous real function of time on [0, T].
///
/// Constant curves are defined for every t. Piecewise-linear and tabulated
/// curves interpolate linearly between strictly increasing knots; tabulated
/// curves use a uniform knot grid starting at 0 so lookups are O(1).
/// Integrals are exact for all kinds.
class TimeCurve {
 public:
  enum class Kind { Constant, PiecewiseLinear, Tabulated };

  TimeCurve() : TimeCurve(constant(0.0)) {}

  static TimeCurve constant(double value);
  static TimeCurve piecewise_linear(std::vector<double> knots, std::vector<double> values);
  static TimeCurve tabulated(double horizon, std::vector<double> samples);
  /// Samples `f` at n+1 uniform points of [0, horizon].
  static TimeCurve sampled(const std::function<double(double)>& f, double horizon, int n);

  Kind kind() const noexcept { return kind_; }
  bool is_constant() const noexcept { return kind_ == Kind::Constant; }
  double constant_value() const;

  double operator()(double t) const;
  /// Right derivative (left derivative at the last knot).
  double slope(double t) const;
  /// \int_a^b of the curve.
  double integral(double a, double b) const;

  /// Largest t at which the curve is defined (infinity for constants).
  double domain_end() const noexcept;
  bool covers(double T) const noexcept;
  double sup_abs() const noexcept;
  bool identically_zero() const noexcept;

  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& values() const noexcept { return values_; }

  TimeCurve scaled(double factor) const;

  friend TimeCurve linear_combination(double a, const TimeCurve& x, double b, const TimeCurve& y);
  /// Pointwise |x| v |y|, with kinks inserted so the result stays exact.
  friend TimeCurve abs_max(const TimeCurve& x, const TimeCurve& y);
  friend TimeCurve abs(const TimeCurve& x);

 private:
  TimeCurve(Kind kind, std::vector<double> knots, std::vector<double> values);
  std::size_t segment(double t) const;
  double primitive(double t) const;

  Kind kind_;
  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> cumulative_;  // \int_{knots_[0]}^{knots_[i]}
};

}  // namespace pathgap
