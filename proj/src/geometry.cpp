#include "pathgap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pathgap/rng.hpp"

namespace pathgap {

Vec Transport::apply(const Vec& w) const {
  switch (kind) {
    case Kind::Identity:
      return w;
    case Kind::Spherical: {
      const double c = unit_dir.dot(w);
      return w + c * (cos_m1 * unit_dir - sin * unit_normal);
    }
    case Kind::Hyperbolic: {
      const auto n = w.size() - 1;
      const double c = unit_dir.head(n).dot(w.head(n)) - unit_dir[n] * w[n];
      return w + c * (cos_m1 * unit_dir + sin * unit_normal);
    }
  }
  return w;
}

Mat Transport::apply(const Mat& frame) const {
  Mat out(frame.rows(), frame.cols());
  for (Eigen::Index j = 0; j < frame.cols(); ++j) out.col(j) = apply(Vec(frame.col(j)));
  return out;
}

namespace {

double minkowski(const Vec& v, const Vec& w) {
  const auto n = v.size() - 1;
  return v.head(n).dot(w.head(n)) - v[n] * w[n];
}

void check_dim(int d) {
  if (d < 1 || d + 1 > kMaxAmbient) {
    throw DimensionError("dimension must lie in [1, " + std::to_string(kMaxAmbient - 1) + "]");
  }
}

}  // namespace

ManifoldModel ManifoldModel::euclidean(int d) {
  check_dim(d);
  return ManifoldModel(Kind::Euclidean, d);
}

ManifoldModel ManifoldModel::sphere(int d, double radius) {
  check_dim(d);
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("sphere radius must be positive");
  ManifoldModel m(Kind::Sphere, d);
  m.radius_ = radius;
  m.curvature_ = 1.0 / (radius * radius);
  return m;
}

ManifoldModel ManifoldModel::hyperbolic(int d, double curvature) {
  check_dim(d);
  if (!(curvature < 0.0) || !std::isfinite(curvature)) throw DomainError("hyperbolic curvature must be negative");
  ManifoldModel m(Kind::Hyperbolic, d);
  m.curvature_ = curvature;
  m.radius_ = 1.0 / std::sqrt(-curvature);
  return m;
}

ManifoldModel ManifoldModel::evolving_sphere(int d, TimeCurve phi2) {
  check_dim(d);
  if (!phi2.is_constant()) {
    for (double v : phi2.values()) {
      if (!(v > 0.0)) throw DomainError("evolving metric factor phi^2 must be positive");
    }
  } else if (!(phi2.constant_value() > 0.0)) {
    throw DomainError("evolving metric factor phi^2 must be positive");
  }
  ManifoldModel m(Kind::EvolvingSphere, d);
  m.phi2_ = std::move(phi2);
  return m;
}

ManifoldModel ManifoldModel::ricci_flow_sphere(int d, double T) {
  if (!(T > 0.0)) throw DomainError("horizon must be positive");
  return evolving_sphere(d, TimeCurve::piecewise_linear({0.0, T}, {1.0, 1.0 + (d - 1) * T}));
}

std::string ManifoldModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Euclidean:
      os << "euclidean(d=" << d_ << ")";
      break;
    case Kind::Sphere:
      os << "sphere(d=" << d_ << ", radius=" << radius_ << ")";
      break;
    case Kind::Hyperbolic:
      os << "hyperbolic(d=" << d_ << ", curvature=" << curvature_ << ")";
      break;
    case Kind::EvolvingSphere:
      os << "evolving_sphere(d=" << d_ << ")";
      break;
  }
  return os.str();
}

double ManifoldModel::inner(double t, const Vec& v, const Vec& w) const {
  switch (kind_) {
    case Kind::Euclidean:
    case Kind::Sphere:
      return v.dot(w);
    case Kind::Hyperbolic:
      return minkowski(v, w);
    case Kind::EvolvingSphere:
      return phi2_(t) * v.dot(w);
  }
  return 0.0;
}

Mat ManifoldModel::metric_matrix(double t) const {
  const int n = ambient_dim();
  Mat G = Mat::Identity(n, n);
  if (kind_ == Kind::Hyperbolic) G(n - 1, n - 1) = -1.0;
  if (kind_ == Kind::EvolvingSphere) G *= phi2_(t);
  return G;
}

Vec ManifoldModel::base_point() const {
  Vec x = Vec::Zero(ambient_dim());
  if (kind_ != Kind::Euclidean) x[d_] = radius_;
  return x;
}

bool ManifoldModel::on_manifold(const Vec& x, double tol) const {
  if (x.size() != ambient_dim() || !x.allFinite()) return false;
  switch (kind_) {
    case Kind::Euclidean:
      return true;
    case Kind::Sphere:
    case Kind::EvolvingSphere:
      return std::abs(x.norm() - radius_) <= tol * radius_;
    case Kind::Hyperbolic:
      return x[d_] > 0.0 && std::abs(minkowski(x, x) + radius_ * radius_) <= tol * (1.0 + x.squaredNorm());
  }
  return false;
}

void ManifoldModel::check_point(const Vec& x) const {
  if (x.size() != ambient_dim()) {
    throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, model " + describe() +
                         " expects " + std::to_string(ambient_dim()));
  }
  if (!on_manifold(x, 1e-8)) throw DomainError("point does not lie on " + describe());
}

Vec ManifoldModel::project_point(const Vec& x) const {
  switch (kind_) {
    case Kind::Euclidean:
      return x;
    case Kind::Sphere:
    case Kind::EvolvingSphere:
      return x * (radius_ / x.norm());
    case Kind::Hyperbolic: {
      const double q = -minkowski(x, x);
      if (!(q > 0.0)) throw DomainError("point is not timelike");
      return x * (radius_ / std::sqrt(q));
    }
  }
  return x;
}

Vec ManifoldModel::project_tangent(const Vec& x, const Vec& v) const {
  switch (kind_) {
    case Kind::Euclidean:
      return v;
    case Kind::Sphere:
    case Kind::EvolvingSphere:
      return v - (x.dot(v) / x.squaredNorm()) * x;
    case Kind::Hyperbolic:
      return v - (minkowski(x, v) / minkowski(x, x)) * x;
  }
  return v;
}

Vec ManifoldModel::gradient_from_ambient(double t, const Vec& x, const Vec& ambient_grad) const {
  switch (kind_) {
    case Kind::Euclidean:
      return ambient_grad;
    case Kind::Sphere:
      return project_tangent(x, ambient_grad);
    case Kind::Hyperbolic: {
      Vec g = ambient_grad;
      g[d_] = -g[d_];
      return project_tangent(x, g);
    }
    case Kind::EvolvingSphere:
      return project_tangent(x, ambient_grad) / phi2_(t);
  }
  return ambient_grad;
}

Mat ManifoldModel::orthonormalize(double t, const Vec& x, const Mat& frame) const {
  Mat out(frame.rows(), frame.cols());
  for (Eigen::Index j = 0; j < frame.cols(); ++j) {
    Vec v = project_tangent(x, Vec(frame.col(j)));
    for (Eigen::Index i = 0; i < j; ++i) v -= inner(t, Vec(out.col(i)), v) * Vec(out.col(i));
    const double n = norm(t, v);
    if (!(n > 0.0)) throw DomainError("degenerate frame");
    out.col(j) = v / n;
  }
  return out;
}

Mat ManifoldModel::frame_at(double t, const Vec& x) const {
  const int n = ambient_dim();
  Mat out(n, d_);
  int filled = 0;
  for (int k = 0; k < n && filled < d_; ++k) {
    Vec v = project_tangent(x, Vec::Unit(n, k));
    for (int i = 0; i < filled; ++i) v -= inner(t, Vec(out.col(i)), v) * Vec(out.col(i));
    const double nv = norm(t, v);
    // Unit candidates have g-norm of order one unless nearly normal to the manifold.
    const double scale = kind_ == Kind::EvolvingSphere ? std::sqrt(phi2_(t)) : 1.0;
    if (nv < 1e-3 * scale) continue;
    out.col(filled++) = v / nv;
  }
  if (filled < d_) throw DomainError("could not build a frame");
  return out;
}

GeodesicStep ManifoldModel::geodesic_step(const Vec& x, const Vec& v) const {
  GeodesicStep step;
  if (kind_ == Kind::Euclidean) {
    step.x = x + v;
    return step;
  }
  const bool hyper = kind_ == Kind::Hyperbolic;
  const double speed = hyper ? std::sqrt(std::max(0.0, minkowski(v, v))) : v.norm();
  if (speed == 0.0) {
    step.x = x;
    return step;
  }
  const double theta = speed / radius_;
  Transport& tr = step.transport;
  tr.kind = hyper ? Transport::Kind::Hyperbolic : Transport::Kind::Spherical;
  tr.unit_dir = v / speed;
  tr.unit_normal = x / radius_;
  if (hyper) {
    tr.cos_m1 = 2.0 * std::sinh(0.5 * theta) * std::sinh(0.5 * theta);
    tr.sin = std::sinh(theta);
  } else {
    tr.cos_m1 = -2.0 * std::sin(0.5 * theta) * std::sin(0.5 * theta);
    tr.sin = std::sin(theta);
  }
  step.x = x + tr.cos_m1 * x + (tr.sin / theta) * v;
  return step;
}

double ManifoldModel::distance(double t, const Vec& x, const Vec& y) const {
  switch (kind_) {
    case Kind::Euclidean:
      return (x - y).norm();
    case Kind::Sphere:
      return 2.0 * radius_ * std::asin(std::min(1.0, (x - y).norm() / (2.0 * radius_)));
    case Kind::EvolvingSphere:
      return std::sqrt(phi2_(t)) * 2.0 * std::asin(std::min(1.0, 0.5 * (x - y).norm()));
    case Kind::Hyperbolic:
      return radius_ * std::acosh(std::max(1.0, -minkowski(x, y) / (radius_ * radius_)));
  }
  return 0.0;
}

double ManifoldModel::ricci_scalar(double t) const {
  switch (kind_) {
    case Kind::Euclidean:
      return 0.0;
    case Kind::Sphere:
    case Kind::Hyperbolic:
      return (d_ - 1) * curvature_;
    case Kind::EvolvingSphere:
      return (d_ - 1) / phi2_(t);
  }
  return 0.0;
}

double ManifoldModel::ricci(double t, const Vec& X, const Vec& Y) const {
  return ricci_scalar(t) * inner(t, X, Y);
}

double ManifoldModel::metric_derivative(double t, const Vec& X, const Vec& Y) const {
  if (kind_ != Kind::EvolvingSphere) throw NotEvolvingError("metric_derivative needs an evolving model");
  return phi2_.slope(t) * X.dot(Y);
}

double ManifoldModel::log_scale_rate(double t) const {
  if (kind_ != Kind::EvolvingSphere) return 0.0;
  return 0.5 * phi2_.slope(t) / phi2_(t);
}

DriftField DriftField::zero() { return DriftField(); }

DriftField DriftField::linear(Mat A) {
  if (A.rows() != A.cols() || A.rows() < 1) throw DimensionError("linear drift needs a square matrix");
  DriftField z;
  z.kind_ = Kind::Linear;
  z.name_ = "linear";
  z.A_ = std::move(A);
  return z;
}

DriftField DriftField::ornstein_uhlenbeck(int d, double lambda) {
  DriftField z = linear(-lambda * Mat::Identity(d, d));
  z.name_ = "ornstein_uhlenbeck";
  z.lambda_ = lambda;
  return z;
}

DriftField DriftField::height_gradient(Vec a, double lambda, double radius) {
  if (!(radius > 0.0)) throw DomainError("radius must be positive");
  DriftField z;
  z.kind_ = Kind::HeightGradient;
  z.name_ = "height_gradient";
  z.a_ = std::move(a);
  z.lambda_ = lambda;
  z.radius_ = radius;
  return z;
}

DriftField DriftField::custom(ValueFn value, DerivFn derivative, std::string name) {
  DriftField z;
  z.kind_ = Kind::Custom;
  z.name_ = std::move(name);
  z.value_ = std::move(value);
  z.deriv_ = std::move(derivative);
  return z;
}

Vec DriftField::value(double t, const Vec& x) const {
  switch (kind_) {
    case Kind::Zero:
      return Vec::Zero(x.size());
    case Kind::Linear:
      return A_ * x;
    case Kind::HeightGradient:
      return lambda_ * (a_ - (a_.dot(x) / (radius_ * radius_)) * x);
    case Kind::Custom:
      return value_(t, x);
  }
  return Vec::Zero(x.size());
}

Vec DriftField::derivative(double t, const Vec& x, const Vec& v) const {
  switch (kind_) {
    case Kind::Zero:
      return Vec::Zero(x.size());
    case Kind::Linear:
      return A_ * v;
    case Kind::HeightGradient:
      return (-lambda_ * a_.dot(x) / (radius_ * radius_)) * v;
    case Kind::Custom:
      return deriv_(t, x, v);
  }
  return Vec::Zero(x.size());
}

void DriftField::check_compatible(const ManifoldModel& model) const {
  switch (kind_) {
    case Kind::Zero:
    case Kind::Custom:
      return;
    case Kind::Linear:
      if (model.kind() != ManifoldModel::Kind::Euclidean) {
        throw IncompatibleConfig("linear drift requires a Euclidean model");
      }
      if (A_.rows() != model.dim()) throw DimensionError("linear drift dimension does not match the model");
      return;
    case Kind::HeightGradient:
      if (model.kind() != ManifoldModel::Kind::Sphere) {
        throw IncompatibleConfig("height-gradient drift requires a static sphere");
      }
      if (a_.size() != model.ambient_dim()) throw DimensionError("height direction must be ambient");
      if (std::abs(radius_ - model.radius()) > 1e-12 * model.radius()) {
        throw IncompatibleConfig("height-gradient radius does not match the sphere");
      }
      return;
  }
}

double ricci_z(const ManifoldModel& model, const DriftField& drift, double t, const Vec& x, const Vec& X,
               const Vec& Y) {
  const int n = model.ambient_dim();
  if (x.size() != n || X.size() != n || Y.size() != n) throw DimensionError("ricci_z: dimension mismatch");
  double r = model.ricci(t, X, Y);
  if (!drift.is_zero()) r -= model.inner(t, drift.derivative(t, x, X), Y);
  if (model.is_evolving()) r -= model.metric_derivative(t, X, Y);
  return r;
}

Mat ricci_z_frame(const ManifoldModel& model, const DriftField& drift, double t, const Vec& x, const Mat& u) {
  const auto d = u.cols();
  Mat R = Mat::Zero(d, d);
  const double ric = model.ricci_scalar(t);
  const Mat G = model.metric_matrix(t);
  const Mat gram = u.transpose() * G * u;
  R = ric * gram;
  if (!drift.is_zero()) {
    Mat dz(u.rows(), d);
    for (Eigen::Index b = 0; b < d; ++b) dz.col(b) = drift.derivative(t, x, Vec(u.col(b)));
    R -= dz.transpose() * G * u;
  }
  if (model.is_evolving()) R -= model.phi2().slope(t) * (u.transpose() * u);
  return R;
}

Vec sample_point(const ManifoldModel& model, std::uint64_t seed, std::uint64_t index, double spread) {
  const int n = model.ambient_dim();
  const NormalSource src(seed, 0x5A17u);
  double z[kMaxAmbient];
  src.normals(index, 0, 7, z, n);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = z[i];
  switch (model.kind()) {
    case ManifoldModel::Kind::Euclidean:
      return spread * v;
    case ManifoldModel::Kind::Sphere:
    case ManifoldModel::Kind::EvolvingSphere:
      return v * (model.radius() / v.norm());
    case ManifoldModel::Kind::Hyperbolic: {
      Vec tangent = Vec::Zero(n);
      tangent.head(n - 1) = v.head(n - 1) * (spread / std::sqrt(static_cast<double>(n - 1)));
      return model.geodesic_step(model.base_point(), tangent).x;
    }
  }
  return v;
}

namespace {

Vec random_tangent(const ManifoldModel& model, double t, const Vec& x, std::uint64_t seed, std::uint64_t index) {
  const int n = model.ambient_dim();
  const NormalSource src(seed, 0x7A46u);
  double z[kMaxAmbient];
  src.normals(index, 1, 9, z, n);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = z[i];
  v = model.project_tangent(x, v);
  return v / model.norm(t, v);
}

PinchingCertificate evolving_pinching(const ManifoldModel& model, double T) {
  const TimeCurve& phi2 = model.phi2();
  const double dm1 = model.dim() - 1;
  auto rate = [&](double s, double t) {
    const double num = dm1 - s;
    if (std::abs(num) <= 1e-12 * std::max(1.0, std::abs(s))) return 0.0;
    return num / phi2(t);
  };
  PinchingCertificate cert;
  cert.exact = true;
  if (phi2.is_constant()) {
    cert.k1 = cert.k2 = TimeCurve::constant(rate(0.0, 0.0));
    cert.witness = "evolving sphere, constant metric";
    return cert;
  }
  constexpr int kCells = 512;
  std::vector<double> cell_lo(kCells), cell_hi(kCells);
  for (int i = 0; i < kCells; ++i) {
    const double a = T * i / kCells;
    const double b = i == kCells - 1 ? T : T * (i + 1) / kCells;
    std::vector<double> cuts{a};
    for (double k : phi2.knots()) {
      if (k > a && k < b) cuts.push_back(k);
    }
    cuts.push_back(b);
    double lo = INFINITY, hi = -INFINITY;
    // On each linear piece of phi^2 the ratio is monotone, so endpoints bound it.
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      const double s = phi2.slope(0.5 * (cuts[j] + cuts[j + 1]));
      for (double t : {cuts[j], cuts[j + 1]}) {
        const double r = rate(s, t);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
    }
    cell_lo[static_cast<std::size_t>(i)] = lo;
    cell_hi[static_cast<std::size_t>(i)] = hi;
  }
  std::vector<double> k1(kCells + 1), k2(kCells + 1);
  for (int i = 0; i <= kCells; ++i) {
    const std::size_t l = static_cast<std::size_t>(std::max(0, i - 1));
    const std::size_t r = static_cast<std::size_t>(std::min(kCells - 1, i));
    k1[static_cast<std::size_t>(i)] = std::min(cell_lo[l], cell_lo[r]);
    k2[static_cast<std::size_t>(i)] = std::max(cell_hi[l], cell_hi[r]);
  }
  auto as_curve = [&](std::vector<double> v) {
    if (std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); })) {
      return TimeCurve::constant(v.front());
    }
    return TimeCurve::tabulated(T, std::move(v));
  };
  cert.k1 = as_curve(std::move(k1));
  cert.k2 = as_curve(std::move(k2));
  cert.witness = "evolving sphere, R^Z = ((d-1) - (phi^2)') / phi^2 bounded cellwise";
  return cert;
}

}  // namespace

PinchingCertificate pinching(const ManifoldModel& model, const DriftField& drift, double T, std::uint64_t seed,
                             int samples) {
  if (!(T > 0.0)) throw DomainError("horizon must be positive");
  drift.check_compatible(model);
  if (model.is_evolving() && !model.phi2().covers(T)) throw DomainError("phi^2 does not cover [0, T]");
  PinchingCertificate cert;
  cert.exact = true;
  const double ric = model.ricci_scalar(0.0);
  if (drift.is_zero()) {
    if (model.is_evolving()) return evolving_pinching(model, T);
    cert.k1 = cert.k2 = TimeCurve::constant(ric);
    cert.witness = "Einstein model, Ric = " + std::to_string(ric) + " g";
    return cert;
  }
  if (drift.kind() == DriftField::Kind::Linear) {
    const Mat A = drift.matrix();
    const Eigen::SelfAdjointEigenSolver<Mat> es(-0.5 * (A + A.transpose()));
    cert.k1 = TimeCurve::constant(es.eigenvalues().minCoeff());
    cert.k2 = TimeCurve::constant(es.eigenvalues().maxCoeff());
    cert.witness = "Euclidean linear drift, spectrum of -sym(A)";
    return cert;
  }
  if (drift.kind() == DriftField::Kind::HeightGradient) {
    const double r = model.radius();
    const double spread = std::abs(drift.strength()) * drift.direction().norm() * r / (r * r);
    cert.k1 = TimeCurve::constant(ric - spread);
    cert.k2 = TimeCurve::constant(ric + spread);
    cert.witness = "sphere height-gradient drift, R^Z = (d-1)/r^2 + lambda <a,x>/r^2";
    return cert;
  }
  // Custom drift: sampled extremes widened by a safety margin.
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < samples; ++i) {
    const double t = T * NormalSource(seed, 0x71u).uniform(static_cast<std::uint64_t>(i), 0, 3);
    const Vec x = sample_point(model, seed, static_cast<std::uint64_t>(i));
    const Vec X = random_tangent(model, t, x, seed, static_cast<std::uint64_t>(i));
    const double r = ricci_z(model, drift, t, x, X, X);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  const double margin = 1e-6 * (1.0 + std::abs(lo) + std::abs(hi));
  cert.exact = false;
  cert.k1 = TimeCurve::constant(lo - margin);
  cert.k2 = TimeCurve::constant(hi + margin);
  cert.witness = "sampled " + std::to_string(samples) + " (t, x, X) with margin " + std::to_string(margin);
  return cert;
}

void check_pinching(const ManifoldModel& model, const DriftField& drift, double T, const TimeCurve& k1,
                    const TimeCurve& k2, std::uint64_t seed, int samples, double tol) {
  drift.check_compatible(model);
  for (int i = 0; i < samples; ++i) {
    const double t = T * NormalSource(seed, 0x72u).uniform(static_cast<std::uint64_t>(i), 0, 3);
    const Vec x = sample_point(model, seed, static_cast<std::uint64_t>(i));
    const Vec X = random_tangent(model, t, x, seed, static_cast<std::uint64_t>(i));
    const double r = ricci_z(model, drift, t, x, X, X);
    if (r < k1(t) - tol || r > k2(t) + tol) {
      std::ostringstream os;
      os << "declared pinching violated at t=" << t << ": R^Z(X,X)=" << r << " outside [" << k1(t) << ", "
         << k2(t) << "]";
      throw CertificateError(os.str());
    }
  }
}

}  // namespace pathgap
