#pragma once

// Independent numerical oracles used only by the tests.

#include <cmath>
#include <functional>

namespace oracle {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 200) {
  if (b == a) return 0.0;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * i);
  return s * h / 3.0;
}

/// Lambda^c from its defining double integral, by nested Simpson quadrature.
inline double lambda_c(double t, double T, double K1, double K2, double c, int n = 200) {
  auto beta = [&](double s) {
    return 1.0 + 0.5 * K2 * simpson([&](double u) { return std::exp(-(0.5 * K1 - c) * (u - s)); }, s, T, n);
  };
  return beta(t) +
         0.5 * K2 * simpson([&](double s) { return beta(s) * std::exp(-(0.5 * K1 + c) * (t - s)); }, 0.0, t, n);
}

/// Brute-force maximum on a uniform grid followed by a fine local grid.
inline double grid_max(const std::function<double(double)>& f, double T, int n) {
  double best = f(0.0);
  int best_i = 0;
  for (int i = 1; i <= n; ++i) {
    const double v = f(std::min(T, T * i / n));
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  const double lo = std::max(0.0, T * (best_i - 1) / n);
  const double hi = std::min(T, T * (best_i + 1) / n);
  for (int i = 0; i <= 1000; ++i) best = std::max(best, f(std::min(hi, lo + (hi - lo) * i / 1000)));
  return best;
}

}  // namespace oracle
