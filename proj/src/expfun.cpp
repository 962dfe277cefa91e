#include "pathgap/expfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace pathgap::expfun {

double phi1(double z) {
  if (z == 0.0) return 1.0;
  if (std::abs(z) < 1e-5) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
  return std::expm1(z) / z;
}

double phi1_minus_one_over_x(double x) {
  if (std::abs(x) < 1e-3) {
    return -0.5 + x * (1.0 / 6.0 + x * (-1.0 / 24.0 + x * (1.0 / 120.0 - x / 720.0)));
  }
  return (phi1(-x) - 1.0) / x;
}

double log1p_remainder(double w) {
  if (std::abs(w) < 1e-3) {
    return -0.5 + w * (1.0 / 3.0 + w * (-0.25 + w * (0.2 - w / 6.0)));
  }
  return (std::log1p(w) - w) / (w * w);
}

double divdiff2(double x, double y) {
  if (x < y) std::swap(x, y);
  return std::exp(y) * phi1(x - y);
}

double divdiff3(double x, double y, double z) {
  std::array<double, 3> p{x, y, z};
  std::sort(p.begin(), p.end());
  const double spread = p[2] - p[0];
  if (spread > 1e-3) {
    return (divdiff2(p[2], p[1]) - divdiff2(p[1], p[0])) / spread;
  }
  // Taylor series about the midpoint: e[.] = e^m * sum_k h_k(a,b,c) / (k+2)!
  // with h_k the complete homogeneous symmetric polynomials.
  const double m = 0.5 * (p[0] + p[2]);
  const double a = p[0] - m;
  const double b = p[1] - m;
  const double c = p[2] - m;
  constexpr int kTerms = 8;
  std::array<double, kTerms> ha{}, hab{}, habc{};
  double pw = 1.0;
  for (int k = 0; k < kTerms; ++k) {
    ha[k] = pw;
    pw *= a;
    hab[k] = ha[k] + (k > 0 ? b * hab[k - 1] : 0.0);
    habc[k] = hab[k] + (k > 0 ? c * habc[k - 1] : 0.0);
  }
  double sum = 0.0;
  double fact = 2.0;  // (k+2)!
  for (int k = 0; k < kTerms; ++k) {
    sum += habc[k] / fact;
    fact *= static_cast<double>(k + 3);
  }
  return std::exp(m) * sum;
}

}  // namespace pathgap::expfun
