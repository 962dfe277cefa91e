#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pathgap/bounds.hpp"
#include "pathgap/functional.hpp"

namespace pathgap {

enum class Verdict { Pass, Fail, Inconclusive };

std::string_view to_string(Verdict v);

/// One-sided test of lhs <= rhs.
///
/// Fail when lhs - rhs exceeds margin_sigmas standard errors plus abs_tol.
/// Inconclusive when the standard error of the difference exceeds
/// noise_fraction * max(|lhs|, |rhs|). Pass otherwise.
struct VerdictPolicy {
  double margin_sigmas = 3.0;
  double noise_fraction = 0.3;
};

struct InequalityCheck {
  std::string name;
  EnergyEstimate lhs;
  EnergyEstimate rhs;
  double difference = 0.0;     ///< lhs - rhs
  double difference_se = 0.0;  ///< from per-path influence values
  double margin_sigmas = 3.0;
  double abs_tol = 0.0;
  Verdict verdict = Verdict::Pass;
  bool degenerate = false;
  /// Auxiliary estimates reported alongside (bound values, oracles, ratios).
  std::map<std::string, double> extras;
};

Verdict decide(double lhs, double rhs, double difference, double difference_se, double abs_tol,
               const VerdictPolicy& policy);

struct RayleighQuotient {
  EnergyEstimate variance;
  EnergyEstimate energy;
  double ratio = 0.0;
  double ratio_std_error = 0.0;
};

/// Var(F) / E int |D_t F|^2 with a delta-method standard error.
RayleighQuotient rayleigh_quotient(const CylindricalFunction& F, const PathEnsemble& ensemble);
RayleighQuotient rayleigh_quotient(const std::vector<double>& values, const std::vector<double>& energies);

/// Var(F) <= H E int |D_t F|^2 dt.
InequalityCheck check_poincare(const CylindricalFunction& F, const PathEnsemble& ensemble, double H,
                               const VerdictPolicy& policy = {});
InequalityCheck check_poincare(const CylindricalFunction& F, const PathEnsemble& ensemble, const BoundReport& bound,
                               const VerdictPolicy& policy = {});
InequalityCheck check_poincare(const std::vector<double>& values, const std::vector<double>& energies, double H,
                               const VerdictPolicy& policy = {});

/// Ent(F^2) <= 2 H E int |D_t F|^2 dt.
InequalityCheck check_log_sobolev(const CylindricalFunction& F, const PathEnsemble& ensemble, double H,
                                  const VerdictPolicy& policy = {});
InequalityCheck check_log_sobolev(const CylindricalFunction& F, const PathEnsemble& ensemble,
                                  const BoundReport& bound, const VerdictPolicy& policy = {});
InequalityCheck check_log_sobolev(const std::vector<double>& values, const std::vector<double>& energies, double H,
                                  const VerdictPolicy& policy = {});

struct GradientCheckOptions {
  int n_paths = 20000;
  double max_step = 1.0 / 256.0;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  double eps_factor = 1e-3;  ///< finite-difference step eps_factor * sqrt(t)
  Scheme scheme = Scheme::GeodesicHeun;
};

/// |grad P_t f|^2(x) <= A(t, c) P_t |grad f|^2(x) with the bracketed coefficient A.
/// extras: "p_t_f" and its "p_t_f_se", "grad_p_t_f_sq", "coefficient".
InequalityCheck check_gradient_estimate(const ManifoldModel& model, const DriftField& drift, const BaseFunction& f,
                                        const Vec& x, double t, double c, const ConstantPinching& pinching,
                                        const GradientCheckOptions& options = {}, const VerdictPolicy& policy = {});

/// The expanded second characterization obtained from F = f(x) - f(X_t)/2.
InequalityCheck check_second_characterization(const ManifoldModel& model, const DriftField& drift,
                                              const BaseFunction& f, const Vec& x, double t, double c,
                                              const ConstantPinching& pinching,
                                              const GradientCheckOptions& options = {},
                                              const VerdictPolicy& policy = {});

struct NestedOptions {
  int inner_paths = 128;
  /// Entropy form of the decomposition; plug-in nested estimates are biased.
  bool experimental_entropy = false;
  double max_work = 4e9;
};

/// E[E[F|F_t2]^2] - E[E[F|F_t1]^2] <= int omega(s) E|D^_s F|^2 ds, by nested simulation
/// from the outer ensemble, whose partition must contain t1 and t2.
InequalityCheck check_martingale_decomposition(const CylindricalFunction& F, const PathEnsemble& outer, double t1,
                                               double t2, double c, const PinchingCertificate& pinching,
                                               const NestedOptions& options = {}, const VerdictPolicy& policy = {});

/// Built-in (model, drift, start, functional) combinations for the inequality suite.
struct Scenario {
  std::string name;
  std::string description;
  ManifoldModel model = ManifoldModel::euclidean(1);
  DriftField drift = DriftField::zero();
  Vec x0;
  /// Cylindrical function for horizon T.
  std::function<CylindricalFunction(double)> functional;
};

const std::vector<Scenario>& builtin_scenarios();
const Scenario& find_scenario(const std::string& name);

struct ScenarioOptions {
  double T = 1.0;
  int n_paths = 100000;
  double max_step = 1.0 / 256.0;
  std::uint64_t seed = 1;
  int batch_paths = 2048;
  Scheme scheme = Scheme::GeodesicHeun;
  bool chains = true;
  SearchPolicy bound_policy = {};
  double max_work = 4e9;
  VerdictPolicy verdict = {};
  /// Declared pinching; the certified interval is used when absent.
  std::optional<PinchingCertificate> pinching;
};

struct ScenarioResult {
  std::string scenario;
  double T = 0.0;
  double k1 = 0.0;  ///< pinching at t = 0
  double k2 = 0.0;
  BoundReport bound;
  RayleighQuotient rayleigh;
  std::vector<InequalityCheck> checks;
};

/// Simulates in batches and runs Poincare, log-Sobolev and the chain checks.
ScenarioResult run_scenario(const Scenario& scenario, const ScenarioOptions& options);

}  // namespace pathgap
