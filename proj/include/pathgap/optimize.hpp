#pragma once

#include <functional>

#include "pathgap/bound_report.hpp"
#include "pathgap/time_curve.hpp"

namespace pathgap {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  double width() const noexcept { return hi - lo; }
};

/// How the infimum over the rate c is handled when evaluating S-type bounds.
struct SearchPolicy {
  enum class Mode { ClosedFormOnly, OptimizeC };

  Mode mode = Mode::ClosedFormOnly;
  /// Empty (lo == hi == 0) means: derive [-5(1+|K|), 5(1+|K|)] from the data.
  Interval c_range{};
  int t_grid = 256;
  int refinement_iters = 40;
  double tol = 1e-9;
  /// Knots of a piecewise-linear c for the time-dependent search (0 = constant c).
  int c_knots = 0;

  void validate() const;
  Interval resolved_c_range(double k_sup) const;
};

struct SupResult {
  double t = 0.0;
  double value = 0.0;
};

struct InfResult {
  double c = 0.0;
  double value = 0.0;
};

/// max of f over [0, T]: grid scan, then golden-section refinement.
SupResult sup_over_t(const std::function<double(double)>& f, double T, int grid, int iters);

/// min of g over c_range: 64-point bracketing scan plus golden section.
/// The result never exceeds g(0).
InfResult inf_over_c(const std::function<double(double)>& g, Interval c_range, double tol);

/// Time-dependent Lambda^c evaluated by composite Simpson quadrature, with
/// interval doubling from 1024 until successive values agree to `tol`.
double tilde_lambda_c(double t, double T, const TimeCurve& K1, const TimeCurve& K2,
                      const TimeCurve& c, double tol = 1e-9);

/// tilde-Lambda^c at the n+1 uniform nodes of [0, T] for a fixed resolution.
std::vector<double> tilde_lambda_sweep(double T, const TimeCurve& K1, const TimeCurve& K2,
                                       const TimeCurve& c, int n);

/// inf over admissible c of sup_t tilde-Lambda^c; `c_star` receives the
/// constant part of the optimiser.
double tilde_s(double T, const TimeCurve& K1, const TimeCurve& K2, const SearchPolicy& policy,
               double* c_star = nullptr);

/// Spectral-gap bound for time-dependent pinching k1(t) <= R^Z_t <= k2(t).
BoundReport tilde_h(double T, const TimeCurve& k1, const TimeCurve& k2, const SearchPolicy& policy);

}  // namespace pathgap
