#include "pathgap/time_curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pathgap/error.hpp"

namespace pathgap {

namespace {

constexpr double kKnotSlack = 1e-12;

std::vector<double> merge_knots(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end(),
                        [](double x, double y) { return std::abs(x - y) <= kKnotSlack * (1.0 + std::abs(x)); }),
            out.end());
  return out;
}

}  // namespace

TimeCurve::TimeCurve(Kind kind, std::vector<double> knots, std::vector<double> values)
    : kind_(kind), knots_(std::move(knots)), values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("time curve values must be finite");
  }
  if (kind_ == Kind::Constant) return;
  if (knots_.size() < 2 || knots_.size() != values_.size()) {
    throw DomainError("time curve needs at least two knots with one value each");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw DomainError("time curve knots must be strictly increasing");
  }
  cumulative_.assign(knots_.size(), 0.0);
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    cumulative_[i] = cumulative_[i - 1] + 0.5 * (values_[i] + values_[i - 1]) * (knots_[i] - knots_[i - 1]);
  }
}

TimeCurve TimeCurve::constant(double value) { return TimeCurve(Kind::Constant, {}, {value}); }

TimeCurve TimeCurve::piecewise_linear(std::vector<double> knots, std::vector<double> values) {
  return TimeCurve(Kind::PiecewiseLinear, std::move(knots), std::move(values));
}

TimeCurve TimeCurve::tabulated(double horizon, std::vector<double> samples) {
  if (!(horizon > 0.0) || samples.size() < 2) {
    throw DomainError("tabulated curve needs a positive horizon and at least two samples");
  }
  const std::size_t n = samples.size() - 1;
  std::vector<double> knots(n + 1);
  for (std::size_t i = 0; i <= n; ++i) knots[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
  knots[n] = horizon;
  return TimeCurve(Kind::Tabulated, std::move(knots), std::move(samples));
}

TimeCurve TimeCurve::sampled(const std::function<double(double)>& f, double horizon, int n) {
  if (n < 1) throw DomainError("sampled curve needs n >= 1");
  std::vector<double> samples(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) samples[static_cast<std::size_t>(i)] = f(horizon * i / n);
  return tabulated(horizon, std::move(samples));
}

double TimeCurve::constant_value() const {
  if (kind_ != Kind::Constant) throw DomainError("curve is not constant");
  return values_.front();
}

std::size_t TimeCurve::segment(double t) const {
  const double lo = knots_.front();
  const double hi = knots_.back();
  const double slack = kKnotSlack * (1.0 + std::abs(hi));
  if (!(t >= lo - slack && t <= hi + slack)) {
    throw DomainError("time " + std::to_string(t) + " outside curve domain [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  const std::size_t last = knots_.size() - 2;
  if (kind_ == Kind::Tabulated) {
    const double step = (hi - lo) / static_cast<double>(knots_.size() - 1);
    const double pos = std::floor((t - lo) / step);
    if (pos <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(pos), last);
  }
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return 0;
  return std::min(static_cast<std::size_t>(it - knots_.begin()) - 1, last);
}

double TimeCurve::operator()(double t) const {
  if (kind_ == Kind::Constant) return values_.front();
  const std::size_t i = segment(t);
  const double w = (t - knots_[i]) / (knots_[i + 1] - knots_[i]);
  return values_[i] + w * (values_[i + 1] - values_[i]);
}

double TimeCurve::slope(double t) const {
  if (kind_ == Kind::Constant) return 0.0;
  const std::size_t i = segment(t);
  return (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
}

double TimeCurve::primitive(double t) const {
  const std::size_t i = segment(t);
  const double dt = t - knots_[i];
  const double s = (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
  return cumulative_[i] + dt * (values_[i] + 0.5 * s * dt);
}

double TimeCurve::integral(double a, double b) const {
  if (kind_ == Kind::Constant) return values_.front() * (b - a);
  return primitive(b) - primitive(a);
}

double TimeCurve::domain_end() const noexcept {
  return kind_ == Kind::Constant ? std::numeric_limits<double>::infinity() : knots_.back();
}

bool TimeCurve::covers(double T) const noexcept {
  if (kind_ == Kind::Constant) return true;
  const double slack = kKnotSlack * (1.0 + std::abs(T));
  return knots_.front() <= slack && knots_.back() >= T - slack;
}

double TimeCurve::sup_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool TimeCurve::identically_zero() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

TimeCurve TimeCurve::scaled(double factor) const {
  TimeCurve out = *this;
  for (double& v : out.values_) v *= factor;
  for (double& v : out.cumulative_) v *= factor;
  return out;
}

namespace {

// Knots on which both curves are defined; empty when both are constant.
std::vector<double> common_knots(const TimeCurve& x, const TimeCurve& y) {
  if (x.is_constant()) return y.knots();
  if (y.is_constant()) return x.knots();
  const double lo = std::max(x.knots().front(), y.knots().front());
  const double hi = std::min(x.knots().back(), y.knots().back());
  if (!(hi > lo)) throw DomainError("time curves have disjoint domains");
  std::vector<double> merged = merge_knots(x.knots(), y.knots());
  std::vector<double> out;
  for (double k : merged) {
    if (k > lo && k < hi) out.push_back(k);
  }
  out.insert(out.begin(), lo);
  out.push_back(hi);
  return out;
}

}  // namespace

TimeCurve linear_combination(double a, const TimeCurve& x, double b, const TimeCurve& y) {
  if (x.is_constant() && y.is_constant()) {
    return TimeCurve::constant(a * x.constant_value() + b * y.constant_value());
  }
  std::vector<double> knots = common_knots(x, y);
  std::vector<double> values(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) values[i] = a * x(knots[i]) + b * y(knots[i]);
  const bool same_grid =
      (x.is_constant() || y.is_constant() || x.knots() == y.knots()) &&
      (x.kind() == TimeCurve::Kind::Tabulated || y.kind() == TimeCurve::Kind::Tabulated) &&
      (x.kind() != TimeCurve::Kind::PiecewiseLinear && y.kind() != TimeCurve::Kind::PiecewiseLinear);
  if (same_grid && knots.front() == 0.0) return TimeCurve::tabulated(knots.back(), std::move(values));
  return TimeCurve::piecewise_linear(std::move(knots), std::move(values));
}

TimeCurve abs_max(const TimeCurve& x, const TimeCurve& y) {
  if (x.is_constant() && y.is_constant()) {
    return TimeCurve::constant(std::max(std::abs(x.constant_value()), std::abs(y.constant_value())));
  }
  const std::vector<double> base = common_knots(x, y);
  std::vector<double> knots{base.front()};
  for (std::size_t i = 0; i + 1 < base.size(); ++i) {
    const double t0 = base[i];
    const double t1 = base[i + 1];
    const double x0 = x(t0), x1 = x(t1), y0 = y(t0), y1 = y(t1);
    // |x| v |y| can only kink where x, y, x - y or x + y changes sign.
    std::vector<double> cuts;
    for (auto [p, q] : {std::pair{x0, x1}, std::pair{y0, y1}, std::pair{x0 - y0, x1 - y1},
                        std::pair{x0 + y0, x1 + y1}}) {
      if ((p < 0.0 && q > 0.0) || (p > 0.0 && q < 0.0)) cuts.push_back(t0 + (t1 - t0) * p / (p - q));
    }
    std::sort(cuts.begin(), cuts.end());
    for (double c : cuts) {
      if (c > knots.back() && c < t1) knots.push_back(c);
    }
    knots.push_back(t1);
  }
  knots = merge_knots(knots, {});
  std::vector<double> values(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) {
    values[i] = std::max(std::abs(x(knots[i])), std::abs(y(knots[i])));
  }
  return TimeCurve::piecewise_linear(std::move(knots), std::move(values));
}

TimeCurve abs(const TimeCurve& x) { return abs_max(x, TimeCurve::constant(0.0)); }

}  // namespace pathgap
