#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pathgap/pathsim.hpp"

namespace pathgap {

enum class GradientKind { Intrinsic, Damped, Modified };

std::string_view to_string(GradientKind k);

/// Smooth function on the ambient space with an analytic gradient.
class BaseFunction {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradientFn = std::function<Vec(const Vec&)>;

  /// <v, x>
  static BaseFunction linear(Vec v);
  /// exp(scale <v, x>)
  static BaseFunction exp_linear(Vec v, double scale = 1.0);
  /// exp(-|x - center|^2 / (2 width^2))
  static BaseFunction gaussian_bump(Vec center, double width);
  /// tanh(<v, x>)
  static BaseFunction tanh_linear(Vec v);
  static BaseFunction constant(double c);
  static BaseFunction custom(ValueFn value, GradientFn ambient_gradient, std::string name = "custom");

  double value(const Vec& x) const { return value_(x); }
  Vec ambient_gradient(const Vec& x) const { return gradient_(x); }
  /// Riemannian gradient at time t.
  Vec gradient(const ManifoldModel& model, double t, const Vec& x) const {
    return model.gradient_from_ambient(t, x, gradient_(x));
  }
  const std::string& name() const noexcept { return name_; }
  bool is_constant() const noexcept { return constant_; }

 private:
  BaseFunction(ValueFn v, GradientFn g, std::string name, bool constant)
      : value_(std::move(v)), gradient_(std::move(g)), name_(std::move(name)), constant_(constant) {}

  ValueFn value_;
  GradientFn gradient_;
  std::string name_;
  bool constant_ = false;
};

/// F(gamma) = f(gamma_{t_1}, ..., gamma_{t_n}) with f a sum or product of base functions.
class CylindricalFunction {
 public:
  enum class Form { Sum, Product };

  static CylindricalFunction single(double t, BaseFunction f);
  static CylindricalFunction sum(std::vector<double> times, std::vector<BaseFunction> parts);
  static CylindricalFunction product(std::vector<double> times, std::vector<BaseFunction> parts);
  static CylindricalFunction constant(double c, double t);

  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t arity() const noexcept { return times_.size(); }
  Form form() const noexcept { return form_; }
  const std::vector<BaseFunction>& parts() const noexcept { return parts_; }
  bool is_constant() const noexcept;
  std::string describe() const;

  double value(const std::vector<Vec>& xs) const;
  /// Riemannian gradients nabla_i f, one per argument, in ambient coordinates.
  std::vector<Vec> gradients(const ManifoldModel& model, const std::vector<Vec>& xs) const;

 private:
  CylindricalFunction(Form form, std::vector<double> times, std::vector<BaseFunction> parts);

  Form form_;
  std::vector<double> times_;
  std::vector<BaseFunction> parts_;
};

struct EnergyEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
  /// Jackknife estimate of the plug-in bias (entropy only).
  double bias = 0.0;
};

/// Mean and CLT standard error of per-path samples.
EnergyEstimate summarize(const std::vector<double>& samples);
/// Plug-in variance with delta-method standard error.
EnergyEstimate variance_of(const std::vector<double>& values);
/// Plug-in entropy of values^2 with delta-method standard error and jackknife bias.
EnergyEstimate entropy_of(const std::vector<double>& values, bool zero_log_zero = false);

/// F evaluated on every path.
std::vector<double> path_values(const CylindricalFunction& F, const PathEnsemble& ensemble);

/// Gradient of F at partition time t, as an ambient tangent vector at x(t).
/// Modified gradients need the pinching curves.
Vec gradient_at(const CylindricalFunction& F, const PathEnsemble& ensemble, int path, double t, GradientKind kind,
                const PinchingCertificate* pinching = nullptr);

/// int_{t0}^T |D_t F|^2 dt per path.
std::vector<double> path_energies(const CylindricalFunction& F, const PathEnsemble& ensemble, GradientKind kind,
                                  const PinchingCertificate* pinching = nullptr);

EnergyEstimate dirichlet_energy(const CylindricalFunction& F, const PathEnsemble& ensemble, GradientKind kind,
                                const PinchingCertificate* pinching = nullptr);
EnergyEstimate variance(const CylindricalFunction& F, const PathEnsemble& ensemble);
/// Entropy of F^2; DomainError on F = 0 unless zero_log_zero is set.
EnergyEstimate entropy(const CylindricalFunction& F, const PathEnsemble& ensemble, bool zero_log_zero = false);

/// int_a^b weight(s) |D^_s F|^2 ds per path (Simpson between cylindrical times).
std::vector<double> weighted_modified_energies(const CylindricalFunction& F, const PathEnsemble& ensemble,
                                               const PinchingCertificate& pinching,
                                               const std::function<double(double)>& weight, double a, double b);

struct ChainReport {
  double max_excess = 0.0;  ///< max of lhs - (1 + slack) rhs over paths and records
  int worst_path = -1;
  double worst_time = 0.0;
  double slack = 0.0;
  bool holds = true;
};

/// |D~_t F| <= |D_t F| + ((|k1| v |k2|)/2) int_t^T e^{-(K1(s)-K1(t))/2} |D_s F| ds at every record.
ChainReport check_damped_chain(const CylindricalFunction& F, const PathEnsemble& ensemble,
                               const PinchingCertificate& pinching, int max_paths = -1);
/// |D^_t F| <= |D_t F| + 1/2 int_t^T |kbar(s)| e^{-1/2 int_t^s kbar} |D_s F| ds at every record.
ChainReport check_modified_chain(const CylindricalFunction& F, const PathEnsemble& ensemble,
                                 const PinchingCertificate& pinching, int max_paths = -1);

}  // namespace pathgap
