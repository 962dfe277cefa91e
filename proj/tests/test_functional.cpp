#include <doctest.h>

#include <cmath>

#include "pathgap/functional.hpp"

using namespace pathgap;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

SimConfig config(double T, int steps, int n_paths, std::uint64_t seed = 11) {
  SimConfig c;
  c.T = T;
  c.steps = steps;
  c.n_paths = n_paths;
  c.seed = seed;
  c.record_stride = 0;
  return c;
}

PinchingCertificate constant_pinching(double k1, double k2) {
  return {TimeCurve::constant(k1), TimeCurve::constant(k2), "test", true};
}

}  // namespace

TEST_CASE("base function gradients match finite differences") {
  const Vec v = vec({0.3, -0.7, 0.2});
  const std::vector<BaseFunction> fs{BaseFunction::linear(v), BaseFunction::exp_linear(v, 0.8),
                                     BaseFunction::gaussian_bump(vec({0.1, 0.2, 0.9}), 0.6),
                                     BaseFunction::tanh_linear(v), BaseFunction::constant(2.0)};
  const auto m = ManifoldModel::sphere(2);
  for (int k = 0; k < 20; ++k) {
    const Vec x = sample_point(m, 5, k, 1.0);
    for (const auto& f : fs) {
      const Vec g = f.ambient_gradient(x);
      for (int a = 0; a < 3; ++a) {
        Vec e = Vec::Zero(3);
        e[a] = 1e-5;
        const double fd = (f.value(x + e) - f.value(x - e)) / 2e-5;
        CHECK(g[a] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
      // Riemannian gradient: the tangential part, checked along a geodesic.
      const Vec grad = f.gradient(m, 0.0, x);
      const Vec w = m.project_tangent(x, vec({0.4, 0.1, -0.5}));
      const double fd = (f.value(m.geodesic_step(x, 1e-5 * w).x) - f.value(m.geodesic_step(x, -1e-5 * w).x)) / 2e-5;
      CHECK(m.inner(0.0, grad, w) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
  const auto F = CylindricalFunction::product({0.5, 1.0}, {fs[1], fs[2]});
  const std::vector<Vec> xs{sample_point(m, 6, 0, 1.0), sample_point(m, 6, 1, 1.0)};
  const auto grads = F.gradients(m, xs);
  for (std::size_t i = 0; i < 2; ++i) {
    const Vec w = m.project_tangent(xs[i], vec({-0.2, 0.6, 0.3}));
    auto shifted = [&](double eps) {
      auto ys = xs;
      ys[i] = m.geodesic_step(xs[i], eps * w).x;
      return F.value(ys);
    };
    CHECK(m.inner(0.0, grads[i], w) == doctest::Approx((shifted(1e-5) - shifted(-1e-5)) / 2e-5).epsilon(1e-5));
  }
  CHECK_THROWS_AS(CylindricalFunction::sum({1.0, 0.5}, {fs[0], fs[1]}), DomainError);
  CHECK_THROWS_AS(CylindricalFunction::sum({0.5}, {fs[0], fs[1]}), DimensionError);
  CHECK(F.describe() == "product(exp_linear@0.5, gaussian_bump@1)");
}

TEST_CASE("flat linear functional has constant intrinsic gradient") {
  const auto m = ManifoldModel::euclidean(2);
  auto cfg = config(1.0, 16, 20);
  cfg.record_stride = 1;
  const auto ens = simulate(m, DriftField::zero(), vec({0.0, 0.0}), cfg, {0.5});
  const Vec v = vec({1.5, -2.0});
  const auto F = CylindricalFunction::single(0.5, BaseFunction::linear(v));
  const auto flat = constant_pinching(0.0, 0.0);
  for (int p = 0; p < 5; ++p) {
    for (double t : {0.0, 0.25, 0.4375}) {
      for (auto kind : {GradientKind::Intrinsic, GradientKind::Damped, GradientKind::Modified}) {
        CHECK((gradient_at(F, ens, p, t, kind, &flat) - v).norm() < 1e-12);
      }
    }
    CHECK(gradient_at(F, ens, p, 0.5, GradientKind::Intrinsic).norm() == 0.0);
    CHECK(gradient_at(F, ens, p, 0.75, GradientKind::Damped).norm() == 0.0);
  }
  const auto G = CylindricalFunction::single(1.0, BaseFunction::linear(v));
  for (auto kind : {GradientKind::Intrinsic, GradientKind::Damped, GradientKind::Modified}) {
    for (double e : path_energies(G, ens, kind, &flat)) CHECK(e == doctest::Approx(v.squaredNorm()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gradient_at(F, ens, 0, 0.3, GradientKind::Intrinsic), DomainError);
  CHECK_THROWS_AS(gradient_at(F, ens, 0, 0.25, GradientKind::Modified), DomainError);
}

TEST_CASE("constant functionals have zero energy, variance and entropy") {
  const auto m = ManifoldModel::sphere(2);
  const auto ens = simulate(m, DriftField::zero(), m.base_point(), config(1.0, 16, 50), {});
  const auto F = CylindricalFunction::constant(3.0, 1.0);
  CHECK(dirichlet_energy(F, ens, GradientKind::Intrinsic).mean == 0.0);
  CHECK(dirichlet_energy(F, ens, GradientKind::Damped).mean == 0.0);
  CHECK(variance(F, ens).mean == 0.0);
  CHECK(std::abs(entropy(F, ens).mean) < 1e-12);
  CHECK_THROWS_AS(entropy(CylindricalFunction::constant(0.0, 1.0), ens), DomainError);
  CHECK(entropy(CylindricalFunction::constant(0.0, 1.0), ens, true).mean == 0.0);
}

TEST_CASE("constant curvature makes damped and modified gradients agree") {
  const auto m = ManifoldModel::sphere(2);
  auto cfg = config(1.0, 32, 10);
  cfg.record_stride = 2;
  const auto ens = simulate(m, DriftField::zero(), vec({0.6, 0.0, 0.8}), cfg, {0.5});
  const auto F = CylindricalFunction::product(
      {0.5, 1.0}, {BaseFunction::tanh_linear(vec({1.0, 0.5, 0.0})), BaseFunction::exp_linear(vec({0.0, 1.0, 1.0}))});
  const auto cert = pinching(m, DriftField::zero(), 1.0, 1, 16);
  for (int p = 0; p < cfg.n_paths; ++p) {
    for (double t : ens.partition()) {
      const Vec a = gradient_at(F, ens, p, t, GradientKind::Damped);
      const Vec b = gradient_at(F, ens, p, t, GradientKind::Modified, &cert);
      CHECK((a - b).norm() < 1e-10);
      CHECK(std::abs(m.inner(t, a, ens.point(p, ens.index_of(t)))) < 1e-10);
    }
  }
}

TEST_CASE("zero mean curvature makes modified equal intrinsic") {
  const auto m = ManifoldModel::euclidean(2);
  Mat A(2, 2);
  A << 1.0, 0.0, 0.0, -1.0;
  const auto drift = DriftField::linear(A);
  const auto cert = pinching(m, drift, 1.0, 1, 16);
  CHECK(cert.k1(0.0) == doctest::Approx(-1.0));
  CHECK(cert.k2(0.0) == doctest::Approx(1.0));
  auto cfg = config(1.0, 16, 5);
  cfg.record_stride = 1;
  const auto ens = simulate(m, drift, vec({0.2, 0.1}), cfg, {0.5});
  const auto F = CylindricalFunction::sum({0.5, 1.0}, {BaseFunction::linear(vec({1.0, 2.0})),
                                                       BaseFunction::gaussian_bump(vec({0.0, 0.0}), 1.0)});
  for (int p = 0; p < 5; ++p) {
    for (double t : ens.partition()) {
      const Vec a = gradient_at(F, ens, p, t, GradientKind::Intrinsic);
      CHECK((gradient_at(F, ens, p, t, GradientKind::Modified, &cert) - a).norm() < 1e-14);
    }
  }
  const auto e1 = path_energies(F, ens, GradientKind::Intrinsic);
  const auto e2 = path_energies(F, ens, GradientKind::Modified, &cert);
  for (std::size_t p = 0; p < e1.size(); ++p) CHECK(e1[p] == doctest::Approx(e2[p]).epsilon(1e-14));
}

TEST_CASE("Ornstein-Uhlenbeck damped and modified energies") {
  const auto m = ManifoldModel::euclidean(2);
  const auto drift = DriftField::ornstein_uhlenbeck(2);
  auto cfg = config(1.0, 256, 4);
  cfg.record_stride = 1;
  const auto ens = simulate(m, drift, vec({0.0, 0.0}), cfg, {});
  const Vec v = vec({0.6, 0.8});
  const auto F = CylindricalFunction::single(1.0, BaseFunction::linear(v));
  const auto cert = pinching(m, drift, 1.0, 1, 16);
  const double exact = 1.0 - std::exp(-1.0);
  for (double e : path_energies(F, ens, GradientKind::Modified, &cert)) CHECK(e == doctest::Approx(exact).epsilon(1e-13));
  for (double e : path_energies(F, ens, GradientKind::Damped)) CHECK(std::abs(e - exact) < 1e-5);
  for (double e : path_energies(F, ens, GradientKind::Intrinsic)) CHECK(e == doctest::Approx(1.0));
}

TEST_CASE("Gaussian variance and entropy oracles") {
  const auto m = ManifoldModel::euclidean(2);
  const double T = 0.8;
  const auto ens = simulate(m, DriftField::zero(), vec({0.1, -0.2}), config(T, 8, 100000), {});
  const Vec v = vec({0.5, 0.25});
  const double s2 = T * v.squaredNorm();
  const auto var = variance(CylindricalFunction::single(T, BaseFunction::linear(v)), ens);
  CHECK(std::abs(var.mean - s2) < 3.0 * var.std_error);
  const double mu = v.dot(vec({0.1, -0.2}));
  const auto ent = entropy(CylindricalFunction::single(T, BaseFunction::exp_linear(v)), ens);
  const double exact = 2.0 * s2 * std::exp(2.0 * mu + 2.0 * s2);
  CHECK(std::abs(ent.mean - exact) < 3.0 * ent.std_error);
  CHECK(std::abs(ent.bias) < ent.std_error);
  CHECK(ent.bias < 0.0);
}

TEST_CASE("sphere energy equals T |grad f|^2 per path") {
  const auto m = ManifoldModel::sphere(2);
  const auto ens = simulate(m, DriftField::zero(), vec({0.6, 0.0, 0.8}), config(1.0, 64, 20000), {});
  const auto F = CylindricalFunction::single(1.0, BaseFunction::linear(vec({1.0, 0.0, 0.0})));
  const auto energies = path_energies(F, ens, GradientKind::Intrinsic);
  std::vector<double> marginal;
  for (int p = 0; p < ens.n_paths(); ++p) {
    const double x1 = ens.point(p, ens.n_records() - 1)[0];
    marginal.push_back(1.0 - x1 * x1);
    CHECK(energies[static_cast<std::size_t>(p)] == doctest::Approx(marginal.back()).epsilon(1e-10));
  }
  // Independent ensemble for the marginal second moment.
  const auto other = simulate(m, DriftField::zero(), vec({0.6, 0.0, 0.8}), config(1.0, 64, 20000, 99), {});
  const auto a = summarize(energies);
  std::vector<double> b;
  for (int p = 0; p < other.n_paths(); ++p) b.push_back(1.0 - std::pow(other.point(p, other.n_records() - 1)[0], 2));
  const auto eb = summarize(b);
  CHECK(std::abs(a.mean - eb.mean) < 3.0 * std::hypot(a.std_error, eb.std_error));
}

TEST_CASE("chain inequalities hold path-wise") {
  const auto m = ManifoldModel::sphere(2);
  const auto drift = DriftField::height_gradient(vec({0.0, 0.0, 1.0}), 0.8);
  const auto cert = pinching(m, drift, 1.0, 1, 16);
  auto cfg = config(1.0, 64, 200);
  cfg.record_stride = 1;
  const auto ens = simulate(m, drift, vec({0.6, 0.0, 0.8}), cfg, {0.25, 0.5});
  const auto F = CylindricalFunction::sum(
      {0.25, 0.5, 1.0}, {BaseFunction::linear(vec({1.0, 0.0, 0.0})), BaseFunction::tanh_linear(vec({0.0, 2.0, 0.0})),
                         BaseFunction::gaussian_bump(vec({0.0, 0.0, 1.0}), 0.7)});
  const auto damped = check_damped_chain(F, ens, cert);
  CHECK(damped.holds);
  const auto modified = check_modified_chain(F, ens, cert);
  CHECK(modified.holds);
  // On hyperbolic space Q grows, so claiming zero curvature breaks the damped chain.
  const auto h = ManifoldModel::hyperbolic(2);
  const auto hens = simulate(h, DriftField::zero(), h.base_point(), cfg, {0.25, 0.5});
  const auto G = CylindricalFunction::single(1.0, BaseFunction::linear(vec({1.0, 0.0, 0.0})));
  CHECK(check_damped_chain(G, hens, pinching(h, DriftField::zero(), 1.0, 1, 16)).holds);
  const auto wrong = check_damped_chain(G, hens, constant_pinching(0.0, 0.0));
  CHECK_FALSE(wrong.holds);
  CHECK(wrong.max_excess > 0.0);

  const auto flow = ManifoldModel::ricci_flow_sphere(2, 1.0);
  const auto fcert = pinching(flow, DriftField::zero(), 1.0, 1, 16);
  const auto fens = simulate(flow, DriftField::zero(), flow.base_point(), cfg, {0.25, 0.5});
  CHECK(check_modified_chain(F, fens, fcert).holds);
  CHECK(check_damped_chain(F, fens, fcert).holds);
}

TEST_CASE("standard errors shrink at the CLT rate") {
  const auto m = ManifoldModel::sphere(2);
  const auto F = CylindricalFunction::single(1.0, BaseFunction::linear(vec({1.0, 0.0, 0.0})));
  const auto small = simulate(m, DriftField::zero(), m.base_point(), config(1.0, 16, 5000), {});
  const auto large = simulate(m, DriftField::zero(), m.base_point(), config(1.0, 16, 20000), {});
  for (auto est : {std::make_pair(variance(F, small), variance(F, large)),
                   std::make_pair(dirichlet_energy(F, small, GradientKind::Intrinsic),
                                  dirichlet_energy(F, large, GradientKind::Intrinsic))}) {
    const double ratio = est.second.std_error / est.first.std_error;
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
  }
}
