#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pathgap/bounds.hpp"

using namespace pathgap;

namespace {
const double kE = std::exp(1.0);
}

TEST_CASE("lambda_closed reference values") {
  CHECK(lambda_closed(1, 1, 0, 2) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(lambda_closed(0.5, 1, 0, 0) == 1.0);
  CHECK(lambda_closed(1, 1, -1, 1) == doctest::Approx(1.85914091422952262).epsilon(1e-14));
  CHECK(lambda_closed(1, 1, 0, 2) == doctest::Approx(oracle::lambda_c(1, 1, 0, 2, 0)).epsilon(1e-10));
  CHECK(lambda_closed(0.3, 2, 1.5, 0.7) == doctest::Approx(oracle::lambda_c(0.3, 2, 1.5, 0.7, 0)).epsilon(1e-10));
}

TEST_CASE("lambda_closed rejects invalid arguments") {
  CHECK_THROWS_AS(lambda_closed(-0.1, 1, 0, 1), DomainError);
  CHECK_THROWS_AS(lambda_closed(1.1, 1, 0, 1), DomainError);
  CHECK_THROWS_AS(lambda_closed(0, 0, 0, 1), DomainError);
  CHECK_THROWS_AS(lambda_closed(0.5, 1, 0, -1), DomainError);
  CHECK_THROWS_AS(big_c(1, 0, -1), DomainError);
  CHECK_THROWS_AS(big_c(-1, 0, 1), DomainError);
}

TEST_CASE("lambda_c reduces to lambda_closed at c = 0") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uT(0.01, 5), uK1(-3, 3), uK2(0, 3), u01(0, 1);
  for (int i = 0; i < 100; ++i) {
    const double T = uT(rng), t = T * u01(rng), K1 = uK1(rng), K2 = uK2(rng);
    const double a = lambda_c(t, T, K1, K2, 0.0);
    const double b = lambda_closed(t, T, K1, K2);
    CHECK(std::abs(a - b) <= 1e-10 * std::abs(b));
  }
}

TEST_CASE("lambda_c against the nested quadrature oracle") {
  CHECK(lambda_c(1, 1, 0, 2, 0) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(lambda_c(0, 1, 2, 2, 1) == doctest::Approx(2.0).epsilon(1e-14));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> uT(0.1, 3), uK1(-3, 3), uK2(0, 3), u01(0, 1), uc(-2, 2);
  for (int i = 0; i < 40; ++i) {
    const double T = uT(rng), t = T * u01(rng), K1 = uK1(rng), K2 = uK2(rng), c = uc(rng);
    CHECK(lambda_c(t, T, K1, K2, c) == doctest::Approx(oracle::lambda_c(t, T, K1, K2, c)).epsilon(1e-8));
  }
  // Degenerate exponents K1/2 - c = 0, K1/2 + c = 0 and nearby.
  for (double d : {0.0, 1e-13, 1e-9, 1e-6, 1e-3}) {
    CHECK(lambda_c(0.7, 1.3, 2.0, 1.5, 1.0 + d) ==
          doctest::Approx(oracle::lambda_c(0.7, 1.3, 2.0, 1.5, 1.0 + d)).epsilon(1e-9));
    CHECK(lambda_c(0.7, 1.3, 2.0, 1.5, -1.0 - d) ==
          doctest::Approx(oracle::lambda_c(0.7, 1.3, 2.0, 1.5, -1.0 - d)).epsilon(1e-9));
  }
}

TEST_CASE("big_c reference values") {
  CHECK(big_c(1, 0, 2) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(big_c(1, -1, 1) == doctest::Approx((1 + kE) / 2).epsilon(1e-14));
  CHECK(big_c(2, 3, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(big_c(1, 1, 1) == doctest::Approx(1.5150996814686360303776).epsilon(1e-14));
  CHECK(big_c(1, 1, 1) ==
        doctest::Approx(4 - std::sqrt(3 * (4 - std::exp(-0.5))) * std::exp(-0.25)).epsilon(1e-14));
}

TEST_CASE("big_c is the supremum of lambda over t") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uT(0.01, 5), uK1(-3, 3), uK2(0, 3);
  for (int i = 0; i < 1000; ++i) {
    const double T = uT(rng), K1 = uK1(rng), K2 = uK2(rng);
    const double sup = oracle::grid_max([&](double t) { return lambda_closed(t, T, K1, K2); }, T, 10000);
    const double c = big_c(T, K1, K2);
    REQUIRE(std::abs(c - sup) <= 1e-6 * sup);
  }
}

TEST_CASE("big_c is continuous at K1 = 0") {
  for (double T : {0.1, 1.0, 4.0}) {
    for (double K2 : {0.0, 0.5, 2.0, 3.0}) {
      const double c0 = big_c(T, 0.0, K2);
      for (double K1 : {1e-8, -1e-8}) {
        CHECK(std::abs(big_c(T, K1, K2) - c0) <= 1e-6);
        CHECK(std::abs(lambda_closed(0.4 * T, T, K1, K2) - lambda_closed(0.4 * T, T, 0.0, K2)) <= 1e-6);
      }
      // Above the series switchover the values still match the quadrature sup.
      for (double K1 : {1e-4, -1e-4, 1e-2}) {
        const double sup = oracle::grid_max([&](double t) { return lambda_closed(t, T, K1, K2); }, T, 2000);
        CHECK(big_c(T, K1, K2) == doctest::Approx(sup).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("ConstantPinching validates its bounds") {
  CHECK_THROWS_AS(ConstantPinching(1.0, 0.5), DomainError);
  CHECK_NOTHROW(ConstantPinching(-1.0, -1.0));
}

TEST_CASE("h_bound closed-form reference values") {
  const BoundReport flat = h_bound(1, {0, 0});
  CHECK(flat.h == 1.0);
  const BoundReport sphere = h_bound(1, {1, 1});
  CHECK(sphere.h == doctest::Approx(1.5150996814686360303776).epsilon(1e-14));
  CHECK(sphere.fang_wu == doctest::Approx(sphere.product).epsilon(1e-14));
  const BoundReport mixed = h_bound(1, {-1, 1});
  CHECK(mixed.h == doctest::Approx((1 + kE) / 2).epsilon(1e-14));
  CHECK(mixed.fang_wu == doctest::Approx(mixed.product).epsilon(1e-14));
}

TEST_CASE("h_bound is the minimum of its branches") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> uT(0.05, 4), uk(-3, 3);
  for (int i = 0; i < 200; ++i) {
    double a = uk(rng), b = uk(rng);
    if (a > b) std::swap(a, b);
    const BoundReport r = h_bound(uT(rng), {a, b});
    CHECK(r.h <= r.fang_wu);
    CHECK(r.h <= r.product);
    CHECK((r.h == r.fang_wu || r.h == r.product));
    CHECK(r.h >= 1.0);
    CHECK((r.branch == BoundBranch::FangWu) == (r.fang_wu <= r.product));
  }
}

TEST_CASE("h_bound with c-search never exceeds the closed form") {
  SearchPolicy policy;
  policy.mode = SearchPolicy::Mode::OptimizeC;
  policy.t_grid = 64;
  for (auto [k1, k2] : {std::pair{0.0, 2.0}, {1.0, 1.0}, {-1.0, 1.0}, {-2.0, 1.0}, {0.5, 3.0}}) {
    const BoundReport closed = h_bound(1, {k1, k2});
    const BoundReport opt = h_bound(1, {k1, k2}, policy);
    CHECK(opt.fang_wu <= closed.fang_wu * (1 + 1e-8));
    CHECK(opt.product <= closed.product * (1 + 1e-8));
    CHECK(opt.h <= closed.h * (1 + 1e-8));
    CHECK(opt.h >= 1.0);
  }
  const InfResult s = s_bound(1, 0, 2, policy);
  CHECK(s.value <= 2.5 + 1e-9);
  CHECK(s_bound(1, 1, 0, policy).value == 1.0);
}

TEST_CASE("asymptotic_bound reference values") {
  for (double k : {0.5, 1.0, 2.0}) {
    const double T = 0.1;
    CHECK(asymptotic_bound(T, {0, k}) == doctest::Approx(1 + k * T / 2 + 5.0 / 48 * k * k * T * T).epsilon(1e-15));
  }
  CHECK(asymptotic_bound(0.3, {0, 0}) == 1.0);
  CHECK(asymptotic_bound(0.01, {-2, 1}) == doctest::Approx(1.010090625).epsilon(1e-15));
}

namespace {

double fitted_second(const std::function<double(double)>& h, double first) {
  // Least-squares line through (T, (h - 1 - a T) / T^2); the intercept is the T^2 coefficient.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (double T = 1e-3; T <= 1e-2 + 1e-12; T += 1e-3, ++n) {
    const double y = (h(T) - 1 - first * T) / (T * T);
    sx += T;
    sy += y;
    sxx += T * T;
    sxy += T * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return (sy - slope * sx) / n;
}

}  // namespace

TEST_CASE("short-time expansions match fitted coefficients") {
  for (auto [k1, k2] : {std::pair{0.0, 1.0}, {0.0, 2.0}, {1.0, 2.0}, {0.5, 0.6}, {-0.5, 1.5}, {-1.0, 2.0},
                        {-2.0, 1.0}, {-1.5, -0.5}}) {
    const ConstantPinching pin(k1, k2);
    const ShortTimeCoefficients h = asymptotic_coefficients(pin);
    const double fit = fitted_second([&](double T) { return h_bound(T, pin).h; }, h.first);
    CHECK(fit == doctest::Approx(h.second).epsilon(0.05));
    const ShortTimeCoefficients fw = fang_wu_coefficients(pin);
    const double kmax = std::max(std::abs(k1), std::abs(k2));
    const double fit_fw = fitted_second([&](double T) { return big_c(T, k1, kmax); }, fw.first);
    CHECK(fit_fw == doctest::Approx(fw.second).epsilon(0.05));
  }
  CHECK(asymptotic_coefficients({0, 1}).second == doctest::Approx(5.0 / 48));
  CHECK(fang_wu_coefficients({0, 1}).second == doctest::Approx(1.0 / 8));
  CHECK(asymptotic_coefficients({-2, 1}).second == doctest::Approx(0.90625));
}

TEST_CASE("product branch has the smaller T^2 coefficient") {
  for (double k1 = 0.0; k1 <= 3.0; k1 += 0.25) {
    for (double k2 = k1; k2 <= 3.5; k2 += 0.25) {
      if (k2 == 0.0) continue;
      const ConstantPinching pin(k1, k2);
      const double diff = asymptotic_coefficients(pin).second - fang_wu_coefficients(pin).second;
      const double expected =
          -(k2 * k2 - k1 * k1) * (4 * k1 + k2) * k2 / (48 * (3 * k1 + k2) * (2 * k1 + k2));
      CHECK(std::abs(diff - expected) <= 1e-9);
      CHECK(diff <= 1e-15);
    }
  }
  for (double k1 = -3.0; k1 < 0.0; k1 += 0.25) {
    for (double k2 = k1; k2 <= 3.0; k2 += 0.25) {
      const ConstantPinching pin(k1, k2);
      const double diff = asymptotic_coefficients(pin).second - fang_wu_coefficients(pin).second;
      const double expected = k1 + k2 >= 0 ? (2 * k1 - k2) * (k1 + k2) / 48 : (k2 * k2 - k1 * k1) / 32;
      CHECK(std::abs(diff - expected) <= 1e-9);
      CHECK(asymptotic_coefficients(pin).first == fang_wu_coefficients(pin).first);
    }
  }
}

TEST_CASE("explicit expansions equal the composed closed forms") {
  auto composed = [](double T, double k1, double k2) {
    const double kmax = std::max(std::abs(k1), std::abs(k2));
    return std::pair{big_c(T, k1, kmax), big_c(T, k1, (k2 - k1) / 2) * big_c(T, (k1 + k2) / 2, std::abs(k1 + k2) / 2)};
  };
  CHECK(explicit_expansions(1, {-1, 0.5}).first == doctest::Approx((1 + kE) / 2).epsilon(1e-14));
  CHECK(explicit_expansions(1, {0, 2}).first == doctest::Approx(2.5).epsilon(1e-14));
  const auto ones = explicit_expansions(1, {1, 1});
  CHECK(ones.second == doctest::Approx(4 - std::sqrt(12 - 3 * std::exp(-0.5)) * std::exp(-0.25)).epsilon(1e-13));
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> uT(0.1, 3), uk(-3, 3);
  int done = 0;
  while (done < 300) {
    double k1 = uk(rng), k2 = uk(rng);
    if (k1 > k2) std::swap(k1, k2);
    if (std::abs(k1) < 0.1) continue;
    const double T = uT(rng);
    const auto got = explicit_expansions(T, {k1, k2});
    const auto want = composed(T, k1, k2);
    CHECK(got.first == doctest::Approx(want.first).epsilon(1e-12));
    CHECK(got.second == doctest::Approx(want.second).epsilon(1e-12));
    ++done;
  }
  for (double k2 : {0.0, 0.5, 2.0}) {
    const auto got = explicit_expansions(0.7, {0, k2});
    const auto want = composed(0.7, 0, k2);
    CHECK(got.first == doctest::Approx(want.first).epsilon(1e-12));
    CHECK(got.second == doctest::Approx(want.second).epsilon(1e-12));
  }
}
