#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "pathgap/error.hpp"
#include "pathgap/time_curve.hpp"

namespace pathgap {

/// Largest supported ambient dimension; fixed so that no step allocates.
inline constexpr int kMaxAmbient = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;

/// Parallel transport along t -> exp_x(t v), t in [0, 1], in closed form.
struct Transport {
  enum class Kind { Identity, Spherical, Hyperbolic };
  Kind kind = Kind::Identity;
  Vec unit_dir;      ///< unit initial velocity
  Vec unit_normal;   ///< x / radius
  double cos_m1 = 0.0;  ///< cos(theta) - 1 or cosh(theta) - 1
  double sin = 0.0;     ///< sin(theta) or sinh(theta)

  Vec apply(const Vec& w) const;
  Mat apply(const Mat& frame) const;
};

struct GeodesicStep {
  Vec x;
  Transport transport;
};

/// A model manifold presented in an ambient space:
///  - Euclidean R^d;
///  - Sphere of radius r in R^{d+1};
///  - Hyperbolic space of curvature kappa < 0 as the upper sheet
///    <x,x>_L = 1/kappa of R^{d,1} (last coordinate timelike);
///  - EvolvingSphere: the unit sphere S^d with metric g_t = phi2(t) * round.
/// Tangent vectors and frames are ambient vectors/matrices. A frame is an
/// ambient x d matrix whose columns are g_t-orthonormal.
class ManifoldModel {
 public:
  enum class Kind { Euclidean, Sphere, Hyperbolic, EvolvingSphere };

  static ManifoldModel euclidean(int d);
  static ManifoldModel sphere(int d, double radius = 1.0);
  static ManifoldModel hyperbolic(int d, double curvature = -1.0);
  /// `phi2` is the conformal factor phi(t)^2 of the round metric.
  static ManifoldModel evolving_sphere(int d, TimeCurve phi2);
  /// The expanding sphere phi^2 = 1 + (d-1) t solving d/dt g = Ric on [0, T].
  static ManifoldModel ricci_flow_sphere(int d, double T);

  Kind kind() const noexcept { return kind_; }
  int dim() const noexcept { return d_; }
  int ambient_dim() const noexcept { return kind_ == Kind::Euclidean ? d_ : d_ + 1; }
  bool is_evolving() const noexcept { return kind_ == Kind::EvolvingSphere; }
  double radius() const noexcept { return radius_; }
  double curvature() const noexcept { return curvature_; }
  const TimeCurve& phi2() const noexcept { return phi2_; }
  std::string describe() const;

  /// g_t(v, w) for ambient tangent vectors at any point.
  double inner(double t, const Vec& v, const Vec& w) const;
  double norm(double t, const Vec& v) const { return std::sqrt(std::max(0.0, inner(t, v, v))); }
  /// Ambient representation G of g_t, i.e. g_t(v, w) = v^T G w.
  Mat metric_matrix(double t) const;

  /// Base point: the origin, the north pole (0,...,0,r) or (0,...,0,1/sqrt(-kappa)).
  Vec base_point() const;
  bool on_manifold(const Vec& x, double tol = 1e-9) const;
  Vec project_point(const Vec& x) const;
  Vec project_tangent(const Vec& x, const Vec& v) const;
  /// Riemannian gradient at (t, x) of a function with ambient gradient `ambient_grad`.
  Vec gradient_from_ambient(double t, const Vec& x, const Vec& ambient_grad) const;
  /// A g_t-orthonormal frame at x, continuous in x.
  Mat frame_at(double t, const Vec& x) const;
  /// Re-orthonormalise `frame` at x w.r.t. g_t after projecting onto T_xM.
  Mat orthonormalize(double t, const Vec& x, const Mat& frame) const;

  /// exp_x(v) and the transport along the geodesic; exact for every model.
  GeodesicStep geodesic_step(const Vec& x, const Vec& v) const;
  /// Riemannian distance at time t.
  double distance(double t, const Vec& x, const Vec& y) const;

  /// Ric_t(X, X) / g_t(X, X): the models are Einstein.
  double ricci_scalar(double t) const;
  /// Ric_t(X, Y).
  double ricci(double t, const Vec& X, const Vec& Y) const;
  /// d/dt g_t(X, Y); NotEvolvingError for static models.
  double metric_derivative(double t, const Vec& X, const Vec& Y) const;
  /// phi'(t) / phi(t) for evolving models, 0 otherwise.
  double log_scale_rate(double t) const;

  void check_point(const Vec& x) const;

 private:
  ManifoldModel(Kind kind, int d) : kind_(kind), d_(d) {}
  Kind kind_;
  int d_;
  double radius_ = 1.0;
  double curvature_ = 0.0;
  TimeCurve phi2_ = TimeCurve::constant(1.0);
};

/// A drift vector field Z_t with its covariant derivative v -> nabla_v Z_t.
class DriftField {
 public:
  enum class Kind { Zero, Linear, HeightGradient, Custom };
  using ValueFn = std::function<Vec(double t, const Vec& x)>;
  using DerivFn = std::function<Vec(double t, const Vec& x, const Vec& v)>;

  static DriftField zero();
  /// Z(x) = A x on Euclidean space; A = -lambda I is the Ornstein-Uhlenbeck drift.
  static DriftField linear(Mat A);
  static DriftField ornstein_uhlenbeck(int d, double lambda = 1.0);
  /// Z = lambda * grad <a, x> on a sphere of the given radius.
  static DriftField height_gradient(Vec a, double lambda, double radius = 1.0);
  static DriftField custom(ValueFn value, DerivFn derivative, std::string name = "custom");

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  const Mat& matrix() const noexcept { return A_; }
  const Vec& direction() const noexcept { return a_; }
  double strength() const noexcept { return lambda_; }
  bool is_zero() const noexcept { return kind_ == Kind::Zero; }

  Vec value(double t, const Vec& x) const;
  Vec derivative(double t, const Vec& x, const Vec& v) const;

  /// Throws DimensionError/IncompatibleConfig if the drift cannot live on `model`.
  void check_compatible(const ManifoldModel& model) const;

 private:
  Kind kind_ = Kind::Zero;
  std::string name_ = "zero";
  Mat A_;
  Vec a_;
  double lambda_ = 0.0;
  double radius_ = 1.0;
  ValueFn value_;
  DerivFn deriv_;
};

/// R^Z_t(X, Y) = Ric_t(X, Y) - g_t(nabla_X Z_t, Y) - d/dt g_t(X, Y).
double ricci_z(const ManifoldModel& model, const DriftField& drift, double t, const Vec& x, const Vec& X,
               const Vec& Y);

/// Matrix of R^Z_t in the frame u: R_ab = R^Z_t(u e_a, u e_b).
Mat ricci_z_frame(const ManifoldModel& model, const DriftField& drift, double t, const Vec& x, const Mat& u);

struct PinchingCertificate {
  TimeCurve k1;
  TimeCurve k2;
  std::string witness;
  bool exact = false;
};

/// Pinching k1(t) <= R^Z_t <= k2(t) on [0, T]: exact for the built-in
/// model/drift pairs, sampled with a safety margin otherwise.
PinchingCertificate pinching(const ManifoldModel& model, const DriftField& drift, double T,
                             std::uint64_t seed = 1, int samples = 20000);

/// Samples (t, x, X) and throws CertificateError if the declared pinching is violated.
void check_pinching(const ManifoldModel& model, const DriftField& drift, double T, const TimeCurve& k1,
                    const TimeCurve& k2, std::uint64_t seed = 1, int samples = 10000, double tol = 1e-8);

/// A point drawn from a fixed distribution on the model (used for sampling certificates).
Vec sample_point(const ManifoldModel& model, std::uint64_t seed, std::uint64_t index, double spread = 2.0);

}  // namespace pathgap
