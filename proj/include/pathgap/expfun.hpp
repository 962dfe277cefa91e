#pragma once

// Cancellation-free building blocks for integrals of exponentials.
//
// Every exponential integral that appears in the bound functions can be
// written through divided differences of exp:
//
//   e[x]       = exp(x)
//   e[x, y]    = (exp(x) - exp(y)) / (x - y)
//   e[x, y, z] = (e[x, y] - e[y, z]) / (x - z)
//
// evaluated here without loss of accuracy when the nodes coalesce.

namespace pathgap::expfun {

/// expm1(z) / z, with the removable singularity filled in.
double phi1(double z);

/// (phi1(-x) - 1) / x, i.e. ((1 - e^{-x}) / x - 1) / x.
double phi1_minus_one_over_x(double x);

/// (log1p(w) - w) / w^2.
double log1p_remainder(double w);

/// First divided difference e[x, y] of exp.
double divdiff2(double x, double y);

/// Second divided difference e[x, y, z] of exp; symmetric in its arguments.
double divdiff3(double x, double y, double z);

/// \int_0^L e^{-a s} ds.
inline double decay_integral(double a, double L) { return L * phi1(-a * L); }

}  // namespace pathgap::expfun
