#pragma once

#include <utility>

#include "pathgap/bound_report.hpp"
#include "pathgap/optimize.hpp"

namespace pathgap {

/// Below this |K1| the K1 = 0 formulas are used.
inline constexpr double kZeroRateThreshold = 1e-12;

/// Lambda(t,T,K1,K2) = Lambda^0, from the two-case closed form.
double lambda_closed(double t, double T, double K1, double K2);

/// Lambda^c(t,T,K1,K2) from the analytically integrated definition.
double lambda_c(double t, double T, double K1, double K2, double c);

/// C(T,K1,K2) = sup_t Lambda(t,T,K1,K2).
double big_c(double T, double K1, double K2);

/// S(T,K1,K2) = inf_c sup_t Lambda^c, searched numerically.
InfResult s_bound(double T, double K1, double K2, const SearchPolicy& policy);

/// H(T,k1,k2) and both of its branches. With ClosedFormOnly every S is
/// replaced by its upper bound C.
BoundReport h_bound(double T, const ConstantPinching& pin, const SearchPolicy& policy = {});

/// Coefficients of 1 + a T + b T^2 in a short-time expansion.
struct ShortTimeCoefficients {
  double first = 0.0;
  double second = 0.0;
};

/// Short-time expansion of H for constant pinching (the product branch).
ShortTimeCoefficients asymptotic_coefficients(const ConstantPinching& pin);
/// Short-time expansion of the Fang-Wu branch C(T,k1,|k1| v |k2|).
ShortTimeCoefficients fang_wu_coefficients(const ConstantPinching& pin);

/// 1 + a T + b T^2 without the o(T^2) remainder.
double asymptotic_bound(double T, const ConstantPinching& pin);

/// Both branches written out explicitly in terms of gamma = k2/k1;
/// first = Fang-Wu branch, second = product branch.
std::pair<double, double> explicit_expansions(double T, const ConstantPinching& pin);

}  // namespace pathgap
