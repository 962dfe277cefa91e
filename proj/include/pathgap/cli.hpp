#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathgap/verify.hpp"

namespace pathgap::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigInvalid = 2, kBudgetExceeded = 3, kInternalError = 4 };

struct BoundsSweep {
  double k1 = 0.0;
  double k2 = 0.0;
  std::vector<double> T;
};

struct AsymptoticsRequest {
  double k1 = 0.0;
  double k2 = 0.0;
  std::vector<double> T;
};

struct SimulationSettings {
  int n_paths = 100000;
  double max_step = 1.0 / 256.0;
  int batch_paths = 2048;
  Scheme scheme = Scheme::GeodesicHeun;
  double max_work = 4e9;
};

/// Poincare / log-Sobolev / chain checks on one (model, drift, functional) at several horizons.
struct ExperimentSpec {
  std::string name;
  Scenario scenario;
  std::vector<double> T;
  std::optional<ConstantPinching> declared;
  bool poincare = true;
  bool log_sobolev = true;
  bool chains = true;
};

struct GradientCheckSpec {
  std::string name;
  bool second = false;  ///< second characterization instead of the gradient estimate
  ManifoldModel model = ManifoldModel::euclidean(1);
  DriftField drift = DriftField::zero();
  BaseFunction function = BaseFunction::constant(0.0);
  Vec point;
  double t = 0.0;
  double c = 0.0;
  ConstantPinching pinching;
  GradientCheckOptions options;
};

struct MartingaleSpec {
  std::string name;
  Scenario scenario;
  double T = 1.0;
  double t1 = 0.0;
  double t2 = 1.0;
  double c = 0.0;
  int outer_paths = 1000;
  std::optional<ConstantPinching> declared;
  NestedOptions nested;
};

struct OutputNames {
  std::string bounds = "bounds.csv";
  std::string checks = "checks.jsonl";
  std::string h_curve = "h_T.dat";
  std::string ratio_curve = "ratio_T.dat";
  std::string asymptotics = "asymptotics.csv";
  std::string resolved = "resolved_config.json";
};

struct ExperimentConfig {
  /// The configuration with every default filled in; parses back to an equivalent experiment.
  nlohmann::ordered_json resolved;
  std::string name;
  std::uint64_t seed = 1;
  SimulationSettings simulation;
  VerdictPolicy verdict;
  SearchPolicy bound_policy;
  std::optional<BoundsSweep> bounds;
  std::optional<AsymptoticsRequest> asymptotics;
  std::vector<ExperimentSpec> experiments;
  std::vector<GradientCheckSpec> gradient_checks;
  std::vector<MartingaleSpec> martingale_checks;
  OutputNames outputs;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> n_paths;
};

/// Parses and validates a JSON configuration; ConfigError names the line and field.
ExperimentConfig parse_config(const std::string& text, const Overrides& overrides = {},
                              const std::string& source = "config");

struct AsymptoticsRow {
  double T = 0.0;
  double h = 1.0;
  double fang_wu = 1.0;
  double product = 1.0;
  double polynomial = 1.0;
  double residual = 0.0;  ///< (h - 1 - a T) / T^2
};

struct AsymptoticsTable {
  double k1 = 0.0;
  double k2 = 0.0;
  std::vector<AsymptoticsRow> rows;
  double predicted_second = 0.0;     ///< T^2 coefficient of the product branch
  double fitted_second = 0.0;        ///< intercept of the least-squares line through the residuals
  double fitted_third = 0.0;
  double predicted_fang_wu = 0.0;    ///< T^2 coefficient of the Fang-Wu branch
  double fitted_fang_wu = 0.0;
};

/// Short-time behaviour of H on a grid in (0, 0.1].
AsymptoticsTable compare_asymptotics(double k1, double k2, const std::vector<double>& T_grid);

struct RunOptions {
  std::string out_dir = ".";
  bool bounds_only = false;
};

struct RunSummary {
  int checks = 0;
  int failed = 0;
  int inconclusive = 0;
  ExitCode exit_code = kOk;
};

/// Executes the experiment and writes every report into out_dir.
RunSummary run(const ExperimentConfig& config, const RunOptions& options);

/// Fixed-format CSV cell (17 significant digits).
std::string format_double(double x);

}  // namespace pathgap::cli
