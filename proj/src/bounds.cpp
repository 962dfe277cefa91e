#include "pathgap/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pathgap/expfun.hpp"

namespace pathgap {

using expfun::decay_integral;
using expfun::phi1;

ConstantPinching::ConstantPinching(double lower, double upper) : k1(lower), k2(upper) {
  if (!std::isfinite(k1) || !std::isfinite(k2)) throw DomainError("pinching bounds must be finite");
  if (k1 > k2) {
    throw DomainError("pinching requires k1 <= k2 (got k1=" + std::to_string(k1) +
                      ", k2=" + std::to_string(k2) + ")");
  }
}

std::string_view to_string(BoundBranch branch) {
  return branch == BoundBranch::FangWu ? "fang_wu" : "product";
}

namespace {

void check_horizon(double T) {
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("horizon T must be positive and finite");
}

void check_lambda_args(double t, double T, double K2) {
  check_horizon(T);
  if (!(t >= 0.0 && t <= T)) throw DomainError("time t must lie in [0, T]");
  if (!(K2 >= 0.0)) throw DomainError("upper rate K2 must be non-negative");
}

}  // namespace

double lambda_closed(double t, double T, double K1, double K2) {
  check_lambda_args(t, T, K2);
  if (std::abs(K1) < kZeroRateThreshold) {
    return 1.0 + 0.5 * K2 * T + K2 * K2 / 8.0 * (2.0 * T * t - t * t);
  }
  // With beta = K2/K1, E1 = 1 - e^{-K1 t/2}, E2 = 1 - e^{-K1 (T-t)/2} the
  // closed form collapses to 1 + a1 + a2 + a1^2/2 + a1 a2 - a1^2 E2 / 2,
  // where a1 = beta E1 and a2 = beta E2 stay bounded as K1 -> 0.
  const double a1 = 0.5 * K2 * t * phi1(-0.5 * K1 * t);
  const double a2 = 0.5 * K2 * (T - t) * phi1(-0.5 * K1 * (T - t));
  const double e2 = -std::expm1(-0.5 * K1 * (T - t));
  return 1.0 + a1 + a2 + 0.5 * a1 * a1 + a1 * a2 - 0.5 * a1 * a1 * e2;
}

double lambda_c(double t, double T, double K1, double K2, double c) {
  check_lambda_args(t, T, K2);
  const double a = 0.5 * K1 - c;  // decay rate inside beta
  const double b = 0.5 * K1 + c;  // decay rate of the memory kernel
  const double ea = decay_integral(a, T - t);
  const double beta = 1.0 + 0.5 * K2 * ea;
  const double kernel = decay_integral(b, t);
  const double nested =
      ea * decay_integral(a + b, t) + t * t * expfun::divdiff3(0.0, -b * t, -(a + b) * t);
  return beta + 0.5 * K2 * (kernel + 0.5 * K2 * nested);
}

double big_c(double T, double K1, double K2) {
  check_horizon(T);
  if (!(K2 >= 0.0)) throw DomainError("upper rate K2 must be non-negative");
  if (std::abs(K1) < kZeroRateThreshold) return 1.0 + 0.5 * K2 * T + K2 * K2 * T * T / 8.0;

  const double x = 0.5 * K1 * T;
  const double s = 0.5 * K2 * T;
  if (K1 < 0.0) {
    const double a = s * phi1(-x);
    return 0.5 + 0.5 * (1.0 + a) * (1.0 + a);
  }
  // (1+b)^2 - b sqrt((2+b)(2+2b-b e^{-2x})) e^{-x/2} rewritten as
  // 1 - (s P / 2) phi1(u) so that nothing of size b^2 is ever cancelled.
  const double phi = phi1(-x);
  const double psi = expfun::phi1_minus_one_over_x(x);
  const double den = 2.0 * x + s;
  const double w = x * s * phi / den;
  const double p = s * psi - 2.0 + s * s * phi * phi * expfun::log1p_remainder(w) / den;
  const double u = x * x * p / (2.0 * den);
  return 1.0 - 0.5 * s * p * phi1(u);
}

InfResult s_bound(double T, double K1, double K2, const SearchPolicy& policy) {
  check_horizon(T);
  if (!(K2 >= 0.0)) throw DomainError("upper rate K2 must be non-negative");
  if (K2 == 0.0) return {0.0, 1.0};
  policy.validate();
  const Interval range = policy.resolved_c_range(std::max(std::abs(K1), std::abs(K2)));
  auto sup_lambda = [&](double c) {
    return sup_over_t([&](double t) { return lambda_c(t, T, K1, K2, c); }, T, policy.t_grid,
                      policy.refinement_iters)
        .value;
  };
  return inf_over_c(sup_lambda, range, policy.tol);
}

BoundReport h_bound(double T, const ConstantPinching& pin, const SearchPolicy& policy) {
  check_horizon(T);
  const double k1 = pin.k1;
  const double k2 = pin.k2;
  const double kmax = std::max(std::abs(k1), std::abs(k2));
  const double half_gap = 0.5 * (k2 - k1);
  const double mean = 0.5 * (k1 + k2);

  BoundReport closed;
  closed.T = T;
  closed.fang_wu = big_c(T, k1, kmax);
  closed.product = big_c(T, k1, half_gap) * big_c(T, mean, std::abs(mean));
  closed.h = std::min(closed.fang_wu, closed.product);
  closed.branch = closed.fang_wu <= closed.product ? BoundBranch::FangWu : BoundBranch::Product;
  if (policy.mode == SearchPolicy::Mode::ClosedFormOnly) return closed;

  BoundReport report = closed;
  try {
    const InfResult fw = s_bound(T, k1, kmax, policy);
    const InfResult p1 = s_bound(T, k1, half_gap, policy);
    const InfResult p2 = s_bound(T, mean, std::abs(mean), policy);
    const double slack = 10.0 * policy.tol;
    const bool finite = std::isfinite(fw.value) && std::isfinite(p1.value) && std::isfinite(p2.value);
    if (!finite || fw.value > closed.fang_wu * (1.0 + slack) ||
        p1.value * p2.value > closed.product * (1.0 + slack)) {
      throw OptimizationFailure("inf over c exceeded the c = 0 closed form", closed);
    }
    report.fang_wu = fw.value;
    report.product = p1.value * p2.value;
    report.h = std::min(report.fang_wu, report.product);
    report.branch = report.fang_wu <= report.product ? BoundBranch::FangWu : BoundBranch::Product;
    report.c_star = report.branch == BoundBranch::FangWu ? fw.c : p1.c;
  } catch (const OptimizationFailure&) {
    throw;
  } catch (const Error& e) {
    throw OptimizationFailure(std::string("c-search failed: ") + e.what(), closed);
  }
  return report;
}

ShortTimeCoefficients fang_wu_coefficients(const ConstantPinching& pin) {
  const double k1 = pin.k1;
  const double k2 = pin.k2;
  if (k1 >= 0.0) {
    const double corr = k2 == 0.0 ? 0.0 : k1 * k2 * (k1 + k2) / (8.0 * (2.0 * k1 + k2));
    return {0.5 * k2, k2 * k2 / 8.0 - corr};
  }
  if (k1 + k2 >= 0.0) return {0.5 * k2, k2 * k2 / 8.0 - k1 * k2 / 8.0};
  return {-0.5 * k1, k1 * k1 / 4.0};
}

ShortTimeCoefficients asymptotic_coefficients(const ConstantPinching& pin) {
  const double k1 = pin.k1;
  const double k2 = pin.k2;
  if (k1 >= 0.0) {
    const double corr =
        k2 == 0.0 ? 0.0 : (7.0 * k1 + k2) * (k1 + k2) * k2 / (6.0 * (3.0 * k1 + k2));
    return {0.5 * k2, (k2 * k2 - corr) / 8.0};
  }
  if (k1 + k2 >= 0.0) {
    return {0.5 * k2, (k2 * k2 + (2.0 * k1 * k1 - k2 * k2 - 5.0 * k1 * k2) / 6.0) / 8.0};
  }
  return {-0.5 * k1, (k1 * k1 + (3.0 * k1 * k1 + k2 * k2) / 4.0) / 8.0};
}

double asymptotic_bound(double T, const ConstantPinching& pin) {
  check_horizon(T);
  const ShortTimeCoefficients c = asymptotic_coefficients(pin);
  return 1.0 + c.first * T + c.second * T * T;
}

std::pair<double, double> explicit_expansions(double T, const ConstantPinching& pin) {
  check_horizon(T);
  const double k1 = pin.k1;
  const double k2 = pin.k2;
  if (std::abs(k1) < kZeroRateThreshold) {
    const double fw = 1.0 + k2 * T / 2.0 + k2 * k2 * T * T / 8.0;
    const double pr = (1.0 + k2 * T / 4.0 + k2 * k2 * T * T / 32.0) *
                      (4.0 - std::sqrt(12.0 - 3.0 * std::exp(-k2 * T / 4.0)) * std::exp(-k2 * T / 8.0));
    return {fw, pr};
  }
  const double g = k2 / k1;
  const double e1 = std::exp(-k1 * T / 2.0);
  const double e1q = std::exp(-k1 * T / 4.0);
  // The mean-curvature factor C(T,(k1+k2)/2,(k1+k2)/2) for k1 + k2 >= 0.
  const double mean_factor = 4.0 - std::sqrt(12.0 - 3.0 * std::exp(-(k1 + k2) * T / 4.0)) *
                                       std::exp(-(k1 + k2) * T / 8.0);
  const double shifted = 1.0 + 0.25 * std::pow(g + 1.0 - (g - 1.0) * e1, 2);
  if (k1 > 0.0) {
    const double fw = (g + 1.0) * (g + 1.0) -
                      g * std::sqrt((2.0 + g) * (2.0 * g + 2.0 - g * e1)) * e1q;
    const double first = 0.25 * ((g + 1.0) * (g + 1.0) - (g - 1.0) * std::sqrt(g + 3.0) *
                                                            std::sqrt(2.0 * g + 2.0 - (g - 1.0) * e1) * e1q);
    return {fw, first * mean_factor};
  }
  if (k1 + k2 >= 0.0) {
    const double fw = 0.5 + 0.5 * std::pow(1.0 + g - g * e1, 2);
    return {fw, 0.5 * shifted * mean_factor};
  }
  const double fw = 0.5 * (1.0 + std::exp(-k1 * T));
  return {fw, 0.25 * shifted * (1.0 + std::exp(-(k1 + k2) * T / 2.0))};
}

}  // namespace pathgap
