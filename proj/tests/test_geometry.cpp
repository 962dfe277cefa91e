#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pathgap/geometry.hpp"
#include "pathgap/rng.hpp"

using namespace pathgap;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vec random_tangent(const ManifoldModel& m, double t, const Vec& x, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec v(m.ambient_dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n(rng);
  return m.project_tangent(x, v);
}

// Conformal chart g = e^{2 sigma} delta, sigma = log 2 - log(1 + s |y|^2) with s = +1
// (stereographic sphere) or s = -1 (Poincare ball). Used as a Christoffel oracle.
struct ConformalChart {
  double s;
  Eigen::Vector2d dsigma(const Eigen::Vector2d& y) const { return -2.0 * s * y / (1.0 + s * y.squaredNorm()); }
  Eigen::Vector2d christoffel(const Eigen::Vector2d& y, const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
    // Gamma(a, b)^k = a^k <b, ds> + b^k <a, ds> - <a, b> ds^k
    const Eigen::Vector2d ds = dsigma(y);
    return a * b.dot(ds) + b * a.dot(ds) - a.dot(b) * ds;
  }
  Vec embed(const Eigen::Vector2d& y) const {
    const double q = 1.0 + s * y.squaredNorm();
    return vec({2 * y[0] / q, 2 * y[1] / q, (1.0 - s * y.squaredNorm()) / q});
  }
  Vec push(const Eigen::Vector2d& y, const Eigen::Vector2d& w) const {
    const double h = 1e-6;
    return (embed(y + h * w) - embed(y - h * w)) / (2 * h);
  }
  // RK4 on (y, y', w) for the geodesic and parallel transport equations.
  void integrate(Eigen::Vector2d& y, Eigen::Vector2d& v, Eigen::Vector2d& w, int steps) const {
    const double h = 1.0 / steps;
    using S = Eigen::Matrix<double, 6, 1>;
    auto f = [&](const S& z) {
      const Eigen::Vector2d yy = z.segment<2>(0), vv = z.segment<2>(2), ww = z.segment<2>(4);
      S out;
      out << vv, -christoffel(yy, vv, vv), -christoffel(yy, vv, ww);
      return out;
    };
    S z;
    z << y, v, w;
    for (int i = 0; i < steps; ++i) {
      const S k1 = f(z), k2 = f(z + 0.5 * h * k1), k3 = f(z + 0.5 * h * k2), k4 = f(z + h * k3);
      z += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    y = z.segment<2>(0);
    v = z.segment<2>(2);
    w = z.segment<2>(4);
  }
};

}  // namespace

TEST_CASE("ricci_z on static models") {
  const auto s2 = ManifoldModel::sphere(2);
  const Vec x = s2.base_point();
  const Vec X = vec({0.3, -0.4, 0});
  CHECK(ricci_z(s2, DriftField::zero(), 0, x, X, X) == doctest::Approx(X.squaredNorm()));
  const auto e3 = ManifoldModel::euclidean(3);
  CHECK(ricci_z(e3, DriftField::zero(), 0, vec({1, 2, 3}), vec({1, 0, 0}), vec({1, 1, 0})) == 0.0);
  CHECK(ricci_z(e3, DriftField::ornstein_uhlenbeck(3), 0, vec({1, 2, 3}), vec({1, 0, 0}), vec({1, 0, 0})) == 1.0);
  CHECK_THROWS_AS(ricci_z(e3, DriftField::zero(), 0, vec({1, 2}), vec({1, 0}), vec({1, 0})), DimensionError);

  const auto s3 = ManifoldModel::sphere(3, 1.0);
  const DriftField z = DriftField::height_gradient(vec({0.3, 0.1, -0.2, 0.5}), 0.7);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vec p = sample_point(s3, 5, static_cast<std::uint64_t>(i));
    const Vec A = random_tangent(s3, 0, p, rng), B = random_tangent(s3, 0, p, rng);
    CHECK(ricci_z(s3, z, 0, p, A, B) == doctest::Approx(ricci_z(s3, z, 0, p, B, A)).epsilon(1e-12));
  }
}

TEST_CASE("expanding sphere has vanishing modified curvature") {
  std::mt19937_64 rng(4);
  for (int d : {2, 3, 4}) {
    const auto m = ManifoldModel::ricci_flow_sphere(d, 2.0);
    for (int i = 0; i < 200; ++i) {
      const double t = 2.0 * (i + 0.5) / 200;
      const Vec x = sample_point(m, 9, static_cast<std::uint64_t>(i));
      const Vec X = random_tangent(m, t, x, rng), Y = random_tangent(m, t, x, rng);
      CHECK(std::abs(ricci_z(m, DriftField::zero(), t, x, X, Y)) <= 1e-10 * (1 + X.norm() * Y.norm()));
    }
    const auto cert = pinching(m, DriftField::zero(), 2.0);
    CHECK(cert.k1.identically_zero());
    CHECK(cert.k2.identically_zero());
  }
}

TEST_CASE("metric_derivative of the conformal family") {
  const auto flat = ManifoldModel::evolving_sphere(2, TimeCurve::constant(1.0));
  const Vec x = flat.base_point();
  CHECK(flat.metric_derivative(0.3, vec({1, 0, 0}), vec({1, 0, 0})) == 0.0);
  const auto a = ManifoldModel::evolving_sphere(2, TimeCurve::piecewise_linear({0, 1}, {1, 2}));
  CHECK(a.metric_derivative(0, vec({1, 0, 0}), vec({1, 0, 0})) == doctest::Approx(1.0));
  const auto b = ManifoldModel::evolving_sphere(3, TimeCurve::piecewise_linear({0, 1}, {1, 3}));
  CHECK(b.metric_derivative(0, vec({1, 0, 0, 0}), vec({1, 0, 0, 0})) == doctest::Approx(2.0));
  // 2 phi'/phi g_t at a later time, with |X|_t = 1.
  const double t = 0.6;
  const Vec X = vec({0, 1, 0, 0}) / std::sqrt(1 + 2 * t);
  CHECK(b.norm(t, X) == doctest::Approx(1.0));
  CHECK(b.metric_derivative(t, X, X) == doctest::Approx(2 * b.log_scale_rate(t)));
  CHECK_THROWS_AS(ManifoldModel::sphere(2).metric_derivative(0, x, x), NotEvolvingError);
}

TEST_CASE("pinching of the built-in models") {
  const auto h2 = pinching(ManifoldModel::hyperbolic(2, -1), DriftField::zero(), 1);
  CHECK(h2.k1.constant_value() == -1.0);
  CHECK(h2.k2.constant_value() == -1.0);
  const auto ou = pinching(ManifoldModel::euclidean(3), DriftField::ornstein_uhlenbeck(3), 1);
  CHECK(ou.k1.constant_value() == doctest::Approx(1.0));
  CHECK(ou.k2.constant_value() == doctest::Approx(1.0));
  const auto s3 = pinching(ManifoldModel::sphere(3), DriftField::zero(), 1);
  CHECK(s3.k1.constant_value() == 2.0);
  CHECK(s3.k2.constant_value() == 2.0);
  Mat A(2, 2);
  A << -1, 0.5, 0.5, -3;
  const auto lin = pinching(ManifoldModel::euclidean(2), DriftField::linear(A), 1);
  CHECK(lin.k1.constant_value() == doctest::Approx(2 - std::sqrt(1.25)));
  CHECK(lin.k2.constant_value() == doctest::Approx(2 + std::sqrt(1.25)));
}

TEST_CASE("emitted certificates are sound on random samples") {
  const Vec a = vec({0.2, 0.3, 0.9});
  struct Case {
    ManifoldModel m;
    DriftField z;
  };
  Mat A(2, 2);
  A << -1, 0.5, -0.2, -3;
  const Case cases[] = {
      {ManifoldModel::sphere(2), DriftField::height_gradient(a, 0.8)},
      {ManifoldModel::hyperbolic(3, -0.5), DriftField::zero()},
      {ManifoldModel::euclidean(2), DriftField::linear(A)},
      {ManifoldModel::evolving_sphere(2, TimeCurve::piecewise_linear({0, 0.5, 1}, {1, 1.2, 2.5})), DriftField::zero()},
  };
  for (const auto& c : cases) {
    const auto cert = pinching(c.m, c.z, 1.0);
    CHECK_NOTHROW(check_pinching(c.m, c.z, 1.0, cert.k1, cert.k2, 17, 10000));
  }
  CHECK_THROWS_AS(check_pinching(ManifoldModel::sphere(2), DriftField::height_gradient(a, 0.8), 1.0,
                                 TimeCurve::constant(1.0), TimeCurve::constant(1.0)),
                  CertificateError);
  // A custom drift gets a sampled certificate.
  const DriftField custom = DriftField::custom([](double, const Vec& x) { Vec v = -2.0 * x; return v; },
                                               [](double, const Vec&, const Vec& v) { Vec w = -2.0 * v; return w; });
  const auto sampled = pinching(ManifoldModel::euclidean(2), custom, 1.0);
  CHECK_FALSE(sampled.exact);
  CHECK(sampled.k1.constant_value() <= 2.0);
  CHECK(sampled.k2.constant_value() >= 2.0);
  CHECK(sampled.k2.constant_value() - 2.0 <= 1e-4);
}

TEST_CASE("drift covariant derivatives match finite differences") {
  const auto s2 = ManifoldModel::sphere(2, 1.5);
  const DriftField z = DriftField::height_gradient(vec({0.2, -0.7, 0.4}), 1.3, 1.5);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vec x = sample_point(s2, 3, static_cast<std::uint64_t>(i));
    const Vec v = random_tangent(s2, 0, x, rng);
    const double h = 1e-5;
    const Vec xp = s2.geodesic_step(x, h * v).x, xm = s2.geodesic_step(x, -h * v).x;
    const Vec fd = s2.project_tangent(x, (z.value(0, xp) - z.value(0, xm)) / (2 * h));
    CHECK((fd - z.derivative(0, x, v)).norm() <= 1e-4);
  }
}

TEST_CASE("closed-form transport is an isometry") {
  std::mt19937_64 rng(6);
  const ManifoldModel models[] = {ManifoldModel::sphere(3, 2.0), ManifoldModel::hyperbolic(3, -2.0),
                                  ManifoldModel::euclidean(3)};
  for (const auto& m : models) {
    Vec x = m.base_point();
    Mat u = m.frame_at(0, x);
    for (int i = 0; i < 200; ++i) {
      const Vec p = sample_point(m, 8, static_cast<std::uint64_t>(i), 1.0);
      Vec v = random_tangent(m, 0, p, rng);
      v *= 1.5 * (i + 1) / 200.0 / m.norm(0, v);
      Vec w = random_tangent(m, 0, p, rng);
      w /= m.norm(0, w);
      const GeodesicStep g = m.geodesic_step(p, v);
      const Vec tw = g.transport.apply(w);
      CHECK(std::abs(m.norm(0, tw) - m.norm(0, w)) <= 1e-12 * m.norm(0, w));
      if (m.kind() != ManifoldModel::Kind::Euclidean) {
        CHECK(std::abs(m.inner(0, g.x, tw)) <= 1e-12 * (1 + g.x.squaredNorm()) * w.norm());
      }
      CHECK(std::abs(m.distance(0, p, g.x) - m.norm(0, v)) <= 1e-10);
    }
    // Frames stay isometric along a long chain without renormalisation.
    for (int step = 0; step < 1000; ++step) {
      Vec v = random_tangent(m, 0, x, rng);
      v *= 0.05 / m.norm(0, v);
      const GeodesicStep g = m.geodesic_step(x, v);
      u = g.transport.apply(u);
      x = g.x;
    }
    const Mat gram = u.transpose() * m.metric_matrix(0) * u;
    INFO(m.describe());
    CHECK((gram - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(m.on_manifold(x, 1e-9));
  }
}

TEST_CASE("holonomy of the octant triangle is a quarter turn") {
  const auto s2 = ManifoldModel::sphere(2);
  const double q = std::numbers::pi / 2;
  Vec x = vec({0, 0, 1});
  Vec w = vec({0, 1, 0});
  const Vec legs[] = {vec({q, 0, 0}), vec({0, q, 0}), vec({0, 0, q})};
  // North pole -> (1,0,0) -> (0,1,0) -> north pole along great circles.
  const Vec targets[] = {vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})};
  for (int i = 0; i < 3; ++i) {
    const Vec dir = s2.project_tangent(x, targets[i] - x);
    const GeodesicStep g = s2.geodesic_step(x, q * dir.normalized());
    CHECK((g.x - targets[i]).norm() <= 1e-12);
    w = g.transport.apply(w);
    x = g.x;
  }
  (void)legs;
  CHECK(std::abs(w.dot(vec({0, 1, 0}))) <= 1e-12);
  CHECK(std::acos(std::clamp(w.dot(vec({0, 1, 0})), -1.0, 1.0)) == doctest::Approx(q));
}

TEST_CASE("closed forms agree with the Christoffel integrator") {
  for (double s : {1.0, -1.0}) {
    const ConformalChart chart{s};
    const auto m = s > 0 ? ManifoldModel::sphere(2) : ManifoldModel::hyperbolic(2, -1);
    Eigen::Vector2d y(0.2, -0.1), v(0.5, 0.3), w(-0.4, 0.7);
    const Vec x0 = chart.embed(y);
    CHECK(m.on_manifold(x0, 1e-12));
    const Vec v0 = chart.push(y, v), w0 = chart.push(y, w);
    const GeodesicStep g = m.geodesic_step(x0, v0);
    chart.integrate(y, v, w, 2000);
    CHECK((chart.embed(y) - g.x).norm() <= 1e-8);
    CHECK((chart.push(y, w) - g.transport.apply(w0)).norm() <= 1e-7);
  }
}

TEST_CASE("finite-difference Gaussian curvature of the model charts") {
  for (double s : {1.0, -1.0}) {
    const ConformalChart chart{s};
    auto sigma = [&](double a, double b) { return std::log(2.0) - std::log(1.0 + s * (a * a + b * b)); };
    const double a = 0.3, b = -0.2, h = 1e-3;
    const double lap = (sigma(a + h, b) + sigma(a - h, b) + sigma(a, b + h) + sigma(a, b - h) - 4 * sigma(a, b)) / (h * h);
    const double K = -std::exp(-2 * sigma(a, b)) * lap;
    CHECK(K == doctest::Approx(s).epsilon(1e-4));
  }
}

TEST_CASE("frames are orthonormal and continuous") {
  const ManifoldModel models[] = {ManifoldModel::sphere(3, 2.0), ManifoldModel::hyperbolic(2, -1.0),
                                  ManifoldModel::ricci_flow_sphere(2, 1.0), ManifoldModel::euclidean(2)};
  for (const auto& m : models) {
    for (int i = 0; i < 20; ++i) {
      const Vec x = sample_point(m, 2, static_cast<std::uint64_t>(i));
      const Mat u = m.frame_at(0.5, x);
      const Mat gram = u.transpose() * m.metric_matrix(0.5) * u;
      CHECK((gram - Mat::Identity(m.dim(), m.dim())).cwiseAbs().maxCoeff() <= 1e-12);
      for (Eigen::Index j = 0; j < u.cols(); ++j) CHECK(std::abs(m.inner(0.5, x, Vec(u.col(j)))) <= 1e-9 * (m.kind() == ManifoldModel::Kind::Euclidean ? 1e12 : 1));
    }
  }
  const auto s2 = ManifoldModel::sphere(2);
  const Vec x = s2.project_point(vec({0.1, 0.2, 1}));
  const Vec y = s2.project_point(vec({0.1 + 1e-7, 0.2, 1}));
  CHECK((s2.frame_at(0, x) - s2.frame_at(0, y)).norm() <= 1e-6);
}

TEST_CASE("Philox reference vector and normal draws") {
  const auto r = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  CHECK(r[0] == 0x6627e8d5u);
  CHECK(r[1] == 0xe169c58du);
  CHECK(r[2] == 0xbc57ac4cu);
  CHECK(r[3] == 0x9b00dbd8u);
  const auto r2 = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(r2[0] == 0x408f276du);
  CHECK(r2[1] == 0x41c83b0eu);
  CHECK(r2[2] == 0xa20bc7c6u);
  CHECK(r2[3] == 0x6d5451fdu);
  const NormalSource src(42);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; i += 2) {
    double z[2];
    src.normals(static_cast<std::uint64_t>(i), 3, 0, z, 2);
    sum += z[0] + z[1];
    sq += z[0] * z[0] + z[1] * z[1];
  }
  CHECK(std::abs(sum / n) <= 4 / std::sqrt(n));
  CHECK(std::abs(sq / n - 1) <= 4 * std::sqrt(2.0 / n));
  double a[3], b[3];
  src.normals(7, 11, 2, a, 3);
  src.normals(7, 11, 2, b, 3);
  CHECK(a[2] == b[2]);
  NormalSource other(42, 1);
  other.normals(7, 11, 2, b, 3);
  CHECK(a[0] != b[0]);
}
