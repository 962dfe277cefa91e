#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pathgap/bounds.hpp"
#include "pathgap/optimize.hpp"

using namespace pathgap;

TEST_CASE("sup_over_t locates endpoint maxima") {
  const SupResult a = sup_over_t([](double t) { return lambda_closed(t, 1, 0, 2); }, 1, 256, 40);
  CHECK(a.t == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(a.value == doctest::Approx(2.5).epsilon(1e-15));
  const SupResult b = sup_over_t([](double) { return 1.0; }, 1, 64, 40);
  CHECK(b.value == 1.0);
  CHECK(b.t == 0.0);
  const SupResult c = sup_over_t([](double t) { return lambda_closed(t, 1, -1, 1); }, 1, 256, 40);
  CHECK(c.t == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(sup_over_t([](double) { return 0.0; }, 1, 8, 40), DomainError);
}

TEST_CASE("sup_over_t finds interior maxima") {
  const SupResult r = sup_over_t([](double t) { return -(t - 0.3141) * (t - 0.3141); }, 1, 16, 40);
  CHECK(r.t == doctest::Approx(0.3141).epsilon(1e-6));
  CHECK(r.value >= -1e-12);
}

TEST_CASE("sup_over_t matches an exhaustive grid") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uT(0.1, 5), uK1(-3, 3), uK2(0, 3), uc(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const double T = uT(rng), K1 = uK1(rng), K2 = uK2(rng), c = uc(rng);
    auto f = [&](double t) { return lambda_c(t, T, K1, K2, c); };
    double exhaustive = f(0.0);
    for (int j = 1; j <= 1000000; ++j) exhaustive = std::max(exhaustive, f(std::min(T, T * j / 1e6)));
    const SupResult r = sup_over_t(f, T, 256, 40);
    CHECK(r.value >= exhaustive - 1e-9);
    CHECK(r.value <= exhaustive + 1e-9 * exhaustive);
  }
}

TEST_CASE("inf_over_c respects feasibility of c = 0") {
  CHECK_THROWS_AS(inf_over_c([](double) { return 1.0; }, {0.5, 1.0}, 1e-9), RangeError);
  const InfResult k2zero = inf_over_c([](double) { return 1.0; }, {-1, 1}, 1e-9);
  CHECK(k2zero.value == 1.0);
  const InfResult parab = inf_over_c([](double c) { return (c - 0.77) * (c - 0.77) + 2; }, {-5, 5}, 1e-10);
  CHECK(parab.c == doctest::Approx(0.77).epsilon(1e-4));
  CHECK(parab.value == doctest::Approx(2.0).epsilon(1e-12));
  auto g = [](double T, double K1, double K2) {
    return [=](double c) { return sup_over_t([&](double t) { return lambda_c(t, T, K1, K2, c); }, T, 128, 40).value; };
  };
  for (auto [T, K1, K2] : {std::tuple{1.0, 0.0, 2.0}, {1.0, 1.0, 1.0}, {2.0, -1.0, 1.5}}) {
    const auto gc = g(T, K1, K2);
    const InfResult r = inf_over_c(gc, {-5, 5}, 1e-9);
    CHECK(r.value <= gc(0.0) + 1e-9);
    CHECK(r.value <= big_c(T, K1, K2) + 1e-9);
    // Consistency: the reported value is the sup at the reported c.
    const double exhaustive =
        oracle::grid_max([&](double t) { return lambda_c(t, T, K1, K2, r.c); }, T, 20000);
    CHECK(r.value >= exhaustive - 1e-9);
  }
}

TEST_CASE("SearchPolicy validation") {
  SearchPolicy p;
  CHECK_NOTHROW(p.validate());
  p.tol = 0.1;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.tol = 1e-9;
  p.c_range = {1, -1};
  CHECK_THROWS_AS(p.validate(), RangeError);
  p.c_range = {};
  CHECK(p.resolved_c_range(2).lo == -15.0);
  CHECK(p.resolved_c_range(2).hi == 15.0);
}

TEST_CASE("TimeCurve evaluation and exact integrals") {
  const TimeCurve c = TimeCurve::constant(2.0);
  CHECK(c(7.0) == 2.0);
  CHECK(c.integral(1, 3) == 4.0);
  const TimeCurve p = TimeCurve::piecewise_linear({0, 1, 3}, {0, 2, -2});
  CHECK(p(0.5) == 1.0);
  CHECK(p(2.0) == 0.0);
  CHECK(p.slope(2.0) == -2.0);
  CHECK(p.integral(0, 3) == doctest::Approx(1.0 + 0.0));
  CHECK(p.integral(0.5, 2.5) == doctest::Approx(oracle::simpson([&](double t) { return p(t); }, 0.5, 1, 2) +
                                                oracle::simpson([&](double t) { return p(t); }, 1, 2.5, 2)));
  CHECK_THROWS_AS(p(3.5), DomainError);
  const TimeCurve s = TimeCurve::sampled([](double t) { return t * t; }, 2.0, 200);
  CHECK(s(1.0) == doctest::Approx(1.0));
  CHECK(s.integral(0, 2) == doctest::Approx(8.0 / 3).epsilon(1e-4));
  CHECK(s.covers(2.0));
  CHECK_FALSE(s.covers(2.5));
}

TEST_CASE("TimeCurve combinators stay exact across sign changes") {
  const TimeCurve x = TimeCurve::piecewise_linear({0, 2}, {-1, 1});
  const TimeCurve y = TimeCurve::constant(0.5);
  const TimeCurve m = abs_max(x, y);
  for (double t = 0; t <= 2; t += 0.125) CHECK(m(t) == doctest::Approx(std::max(std::abs(t - 1), 0.5)));
  CHECK(m.integral(0, 2) == doctest::Approx(0.375 + 0.5 + 0.375));
  const TimeCurve a = abs(x);
  CHECK(a.integral(0, 2) == doctest::Approx(1.0));
  const TimeCurve l = linear_combination(2.0, x, -1.0, y);
  CHECK(l(1.5) == doctest::Approx(0.5));
  CHECK(x.scaled(3.0).integral(1, 2) == doctest::Approx(1.5));
}

TEST_CASE("tilde_lambda_c reduces to lambda_c for constant curves") {
  const TimeCurve K1 = TimeCurve::constant(0.0), K2 = TimeCurve::constant(2.0), c = TimeCurve::constant(0.0);
  CHECK(tilde_lambda_c(1, 1, K1, K2, c) == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(tilde_lambda_c(0.4, 1, K1, TimeCurve::constant(0.0), c) == 1.0);
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> uT(0.1, 3), uK1(-3, 3), uK2(0, 3), u01(0, 1), uc(-2, 2);
  for (int i = 0; i < 50; ++i) {
    const double T = uT(rng), t = T * u01(rng), k1 = uK1(rng), k2 = uK2(rng), cc = uc(rng);
    const double got = tilde_lambda_c(t, T, TimeCurve::constant(k1), TimeCurve::constant(k2), TimeCurve::constant(cc));
    CHECK(std::abs(got - lambda_c(t, T, k1, k2, cc)) <= 1e-8);
  }
}

TEST_CASE("tilde_lambda_c with a time-dependent curve") {
  const TimeCurve K1 = TimeCurve::piecewise_linear({0, 1}, {0, 1});
  const TimeCurve one = TimeCurve::constant(1.0), zero = TimeCurve::constant(0.0);
  CHECK(tilde_lambda_c(0, 1, K1, one, zero) == doctest::Approx(1.4612810064127924).epsilon(1e-10));
  // Nested quadrature oracle at an interior point.
  const double t = 0.6;
  auto alpha = [&](double s) {
    return 1 + 0.5 * oracle::simpson([&](double u) { return std::exp(-0.25 * (u * u - s * s)); }, s, 1, 400);
  };
  const double want =
      alpha(t) + 0.5 * oracle::simpson([&](double s) { return alpha(s) * std::exp(-0.25 * (t * t - s * s)); }, 0, t, 400);
  CHECK(tilde_lambda_c(t, 1, K1, one, zero) == doctest::Approx(want).epsilon(1e-10));
  // Richardson-style check: the sweep converges to the adaptive value.
  const std::vector<double> sweep = tilde_lambda_sweep(1, K1, one, zero, 2000);
  CHECK(sweep[1200] == doctest::Approx(want).epsilon(1e-10));
  CHECK(sweep.front() == doctest::Approx(1.4612810064127924).epsilon(1e-10));
}

TEST_CASE("tilde_h reduces to h_bound") {
  SearchPolicy p;
  CHECK(tilde_h(1, TimeCurve::constant(0), TimeCurve::constant(0), p).h == 1.0);
  CHECK(tilde_h(1, TimeCurve::constant(-1), TimeCurve::constant(1), p).h ==
        doctest::Approx((1 + std::exp(1.0)) / 2).epsilon(1e-12));
  const TimeCurve zero = TimeCurve::piecewise_linear({0, 1}, {0, 0});
  CHECK(tilde_h(1, zero, zero, p).h == 1.0);
  // A non-constant curve pair that happens to be constant gives the constant answer.
  const TimeCurve m1 = TimeCurve::piecewise_linear({0, 0.5, 1}, {-1, -1, -1});
  const TimeCurve p1 = TimeCurve::piecewise_linear({0, 1}, {1, 1});
  CHECK(tilde_h(1, m1, p1, p).h == doctest::Approx((1 + std::exp(1.0)) / 2).epsilon(1e-8));
  CHECK_THROWS_AS(tilde_h(1, p1, m1, p), DomainError);
}

TEST_CASE("tilde_s search never exceeds the c = 0 value") {
  const TimeCurve K1 = TimeCurve::piecewise_linear({0, 1}, {-0.5, 1.0});
  const TimeCurve K2 = TimeCurve::piecewise_linear({0, 1}, {1.0, 0.5});
  SearchPolicy p;
  p.t_grid = 16;
  const double closed = tilde_s(1, K1, K2, p);
  p.mode = SearchPolicy::Mode::OptimizeC;
  double c_star = 0;
  const double opt = tilde_s(1, K1, K2, p, &c_star);
  CHECK(opt <= closed + 1e-9);
  CHECK(opt >= 1.0);
  p.c_knots = 3;
  const double pl = tilde_s(1, K1, K2, p);
  CHECK(pl <= opt + 1e-9);
}
