#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pathgap/cli.hpp"

namespace {

int list_scenarios() {
  for (const auto& sc : pathgap::builtin_scenarios()) {
    std::cout << sc.name << "\t" << sc.description << "\t" << sc.functional(1.0).describe() << "\n";
  }
  return pathgap::cli::kOk;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pathgap::ConfigError(path + ": cannot read configuration");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A minimal experiment on one built-in scenario, for quick runs without a file.
std::string scenario_config(const std::string& name, double T) {
  nlohmann::ordered_json j;
  j["schema_version"] = pathgap::cli::kSchemaVersion;
  j["name"] = name;
  j["experiments"] = {{{"scenario", name}, {"T", {T}}}};
  return j.dump(2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral gap bounds on path space and their Monte Carlo verification"};
  std::string config_path;
  std::string scenario;
  double horizon = 1.0;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int paths = 0;
  bool bounds_only = false;
  bool list = false;
  auto* config_opt = app.add_option("--config", config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  auto* scenario_opt =
      app.add_option("--scenario", scenario, "run the inequality suite on one built-in scenario")->excludes(config_opt);
  app.add_option("--horizon", horizon, "horizon T used with --scenario")->needs(scenario_opt);
  auto* seed_opt = app.add_option("--seed-override", seed, "replace the configured seed");
  auto* paths_opt = app.add_option("--paths-override", paths, "replace simulation.n_paths")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "directory for the reports");
  app.add_flag("--bounds-only", bounds_only, "evaluate bounds and asymptotics, skip simulations");
  app.add_flag("--list-scenarios", list, "print the built-in scenarios and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : pathgap::cli::kConfigInvalid;
  }
  if (list) return list_scenarios();
  if (config_path.empty() && scenario.empty()) {
    std::cerr << "error: one of --config or --scenario is required\n";
    return pathgap::cli::kConfigInvalid;
  }

  try {
    pathgap::cli::Overrides overrides;
    if (*seed_opt) overrides.seed = seed;
    if (*paths_opt) overrides.n_paths = paths;
    const auto cfg = config_path.empty()
                         ? pathgap::cli::parse_config(scenario_config(scenario, horizon), overrides, "--scenario")
                         : pathgap::cli::parse_config(read_file(config_path), overrides, config_path);
    const auto summary = pathgap::cli::run(cfg, {out_dir, bounds_only});
    std::cout << cfg.name << ": " << summary.checks << " checks, " << summary.failed << " failed, "
              << summary.inconclusive << " inconclusive\n";
    return summary.exit_code;
  } catch (const pathgap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return pathgap::cli::kConfigInvalid;
  } catch (const pathgap::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return pathgap::cli::kBudgetExceeded;
  } catch (const pathgap::DomainError& e) {
    std::cerr << "invalid experiment: " << e.what() << "\n";
    return pathgap::cli::kConfigInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pathgap::cli::kInternalError;
  }
}
