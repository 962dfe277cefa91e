#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pathgap/cli.hpp"

namespace pathgap::cli {

using json = nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

// Least-squares line y = a + b x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return {y.empty() ? 0.0 : y.front(), 0.0};
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return {my, 0.0};
  const double b = sxy / sxx;
  return {my - b * mx, b};
}

json estimate_json(const EnergyEstimate& e) {
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"n_paths", e.n_paths}, {"bias", e.bias}};
}

json check_json(const InequalityCheck& c) {
  json j;
  j["check"] = c.name;
  j["verdict"] = std::string(to_string(c.verdict));
  j["lhs"] = estimate_json(c.lhs);
  j["rhs"] = estimate_json(c.rhs);
  j["difference"] = c.difference;
  j["difference_se"] = c.difference_se;
  j["margin_sigmas"] = c.margin_sigmas;
  j["abs_tol"] = c.abs_tol;
  j["degenerate"] = c.degenerate;
  json extras = json::object();
  for (const auto& [k, v] : c.extras) extras[k] = v;
  j["extras"] = extras;
  return j;
}

PinchingCertificate declared_certificate(const ConstantPinching& p) {
  return {TimeCurve::constant(p.k1), TimeCurve::constant(p.k2), "declared", false};
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw Error("failed writing " + path.string());
}

struct Collected {
  std::vector<json> records;
  std::string bounds_csv;
  std::string h_curve;
  std::string ratio_curve;
  std::string asymptotics_csv;
};

void add_check(Collected& col, RunSummary& sum, json context, const InequalityCheck& c) {
  const json fields = check_json(c);
  for (const auto& [k, v] : fields.items()) context[k] = v;
  col.records.push_back(std::move(context));
  ++sum.checks;
  if (c.verdict == Verdict::Fail) ++sum.failed;
  if (c.verdict == Verdict::Inconclusive) ++sum.inconclusive;
}

void bounds_section(const ExperimentConfig& cfg, Collected& col) {
  const BoundsSweep& s = *cfg.bounds;
  const ConstantPinching pin(s.k1, s.k2);
  std::ostringstream csv, dat;
  csv << "T,k1,k2,fang_wu,product,h,branch,c_star,asymptotic\n";
  dat << "# H(T) for k1=" << format_double(s.k1) << " k2=" << format_double(s.k2) << "\n# T h\n";
  for (double T : s.T) {
    BoundReport r;
    try {
      r = h_bound(T, pin, cfg.bound_policy);
    } catch (const OptimizationFailure& e) {
      r = e.fallback();
    }
    csv << format_double(T) << ',' << format_double(s.k1) << ',' << format_double(s.k2) << ','
        << format_double(r.fang_wu) << ',' << format_double(r.product) << ',' << format_double(r.h) << ','
        << to_string(r.branch) << ',' << format_double(r.c_star) << ',' << format_double(asymptotic_bound(T, pin))
        << '\n';
    dat << format_double(T) << ' ' << format_double(r.h) << '\n';
  }
  col.bounds_csv = csv.str();
  col.h_curve += dat.str();
}

void asymptotics_section(const ExperimentConfig& cfg, Collected& col, RunSummary& sum) {
  const AsymptoticsRequest& a = *cfg.asymptotics;
  const AsymptoticsTable t = compare_asymptotics(a.k1, a.k2, a.T);
  std::ostringstream csv;
  csv << "T,h,fang_wu,product,polynomial,residual\n";
  for (const auto& r : t.rows) {
    csv << format_double(r.T) << ',' << format_double(r.h) << ',' << format_double(r.fang_wu) << ','
        << format_double(r.product) << ',' << format_double(r.polynomial) << ',' << format_double(r.residual)
        << '\n';
  }
  col.asymptotics_csv = csv.str();

  // Fitted T^2 coefficients against the predicted ones, 5% relative.
  auto coefficient_check = [&](const char* name, double fitted, double predicted) {
    InequalityCheck c;
    c.name = name;
    c.lhs.mean = std::abs(fitted - predicted);
    c.rhs.mean = 0.05 * std::abs(predicted);
    c.difference = c.lhs.mean - c.rhs.mean;
    c.abs_tol = 1e-12;
    c.verdict = c.difference > c.abs_tol ? Verdict::Fail : Verdict::Pass;
    c.extras = {{"fitted", fitted}, {"predicted", predicted}};
    json ctx;
    ctx["section"] = "asymptotics";
    ctx["k1"] = a.k1;
    ctx["k2"] = a.k2;
    add_check(col, sum, ctx, c);
  };
  coefficient_check("asymptotic_second", t.fitted_second, t.predicted_second);
  coefficient_check("asymptotic_fang_wu", t.fitted_fang_wu, t.predicted_fang_wu);
}

void experiment_section(const ExperimentConfig& cfg, const ExperimentSpec& e, Collected& col, RunSummary& sum) {
  std::ostringstream dat;
  dat << "# " << e.name << ": Var/energy ratio against H\n# T ratio ratio_se H\n";
  for (double T : e.T) {
    ScenarioOptions o;
    o.T = T;
    o.n_paths = cfg.simulation.n_paths;
    o.max_step = cfg.simulation.max_step;
    o.seed = cfg.seed;
    o.batch_paths = cfg.simulation.batch_paths;
    o.scheme = cfg.simulation.scheme;
    o.chains = e.chains;
    o.bound_policy = cfg.bound_policy;
    o.max_work = cfg.simulation.max_work;
    o.verdict = cfg.verdict;
    if (e.declared) o.pinching = declared_certificate(*e.declared);
    const ScenarioResult r = run_scenario(e.scenario, o);
    json ctx;
    ctx["section"] = "experiment";
    ctx["experiment"] = e.name;
    ctx["T"] = T;
    ctx["k1"] = r.k1;
    ctx["k2"] = r.k2;
    ctx["h"] = r.bound.h;
    ctx["branch"] = std::string(to_string(r.bound.branch));
    ctx["functional"] = e.scenario.functional(T).describe();
    for (const auto& c : r.checks) {
      const bool wanted = (c.name == "poincare" && e.poincare) || (c.name == "log_sobolev" && e.log_sobolev) ||
                          ((c.name == "damped_chain" || c.name == "modified_chain") && e.chains);
      if (wanted) add_check(col, sum, ctx, c);
    }
    dat << format_double(T) << ' ' << format_double(r.rayleigh.ratio) << ' '
        << format_double(r.rayleigh.ratio_std_error) << ' ' << format_double(r.bound.h) << '\n';
  }
  col.ratio_curve += (col.ratio_curve.empty() ? "" : "\n\n") + dat.str();
}

void gradient_section(const ExperimentConfig& cfg, const GradientCheckSpec& g, Collected& col, RunSummary& sum) {
  const InequalityCheck c =
      g.second ? check_second_characterization(g.model, g.drift, g.function, g.point, g.t, g.c, g.pinching,
                                               g.options, cfg.verdict)
               : check_gradient_estimate(g.model, g.drift, g.function, g.point, g.t, g.c, g.pinching, g.options,
                                         cfg.verdict);
  json ctx;
  ctx["section"] = "gradient";
  ctx["experiment"] = g.name;
  ctx["t"] = g.t;
  ctx["c"] = g.c;
  ctx["k1"] = g.pinching.k1;
  ctx["k2"] = g.pinching.k2;
  ctx["function"] = g.function.name();
  add_check(col, sum, ctx, c);
}

void martingale_section(const ExperimentConfig& cfg, const MartingaleSpec& m, Collected& col, RunSummary& sum) {
  const CylindricalFunction F = m.scenario.functional(m.T);
  const PinchingCertificate cert = m.declared ? declared_certificate(*m.declared)
                                              : pinching(m.scenario.model, m.scenario.drift, m.T, cfg.seed, 64);
  SimConfig sc;
  sc.T = m.T;
  sc.steps = std::max(1, static_cast<int>(std::ceil(m.T / cfg.simulation.max_step - 1e-9)));
  sc.n_paths = m.outer_paths;
  sc.seed = cfg.seed;
  sc.scheme = cfg.simulation.scheme;
  sc.record_stride = 0;
  sc.max_work = cfg.simulation.max_work;
  std::vector<double> times = F.times();
  times.push_back(m.t1);
  times.push_back(m.t2);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  times.erase(std::remove(times.begin(), times.end(), 0.0), times.end());
  const auto outer = simulate(m.scenario.model, m.scenario.drift, m.scenario.x0, sc, times);
  const InequalityCheck c = check_martingale_decomposition(F, outer, m.t1, m.t2, m.c, cert, m.nested, cfg.verdict);
  json ctx;
  ctx["section"] = "martingale";
  ctx["experiment"] = m.name;
  ctx["T"] = m.T;
  ctx["t1"] = m.t1;
  ctx["t2"] = m.t2;
  ctx["c"] = m.c;
  ctx["functional"] = F.describe();
  add_check(col, sum, ctx, c);
}

}  // namespace

AsymptoticsTable compare_asymptotics(double k1, double k2, const std::vector<double>& T_grid) {
  if (T_grid.empty()) throw DomainError("asymptotics grid is empty");
  for (double T : T_grid) {
    if (!(T > 0.0 && T <= 0.1)) throw DomainError("asymptotics grid must lie in (0, 0.1]");
  }
  const ConstantPinching pin(k1, k2);
  const ShortTimeCoefficients prod = asymptotic_coefficients(pin);
  const ShortTimeCoefficients fw = fang_wu_coefficients(pin);
  AsymptoticsTable t;
  t.k1 = k1;
  t.k2 = k2;
  t.predicted_second = prod.second;
  t.predicted_fang_wu = fw.second;
  std::vector<double> xs, res, res_fw;
  for (double T : T_grid) {
    const BoundReport r = h_bound(T, pin);
    AsymptoticsRow row;
    row.T = T;
    row.h = r.h;
    row.fang_wu = r.fang_wu;
    row.product = r.product;
    row.polynomial = asymptotic_bound(T, pin);
    row.residual = (r.h - 1.0 - prod.first * T) / (T * T);
    t.rows.push_back(row);
    xs.push_back(T);
    res.push_back(row.residual);
    res_fw.push_back((r.fang_wu - 1.0 - fw.first * T) / (T * T));
  }
  std::tie(t.fitted_second, t.fitted_third) = fit_line(xs, res);
  t.fitted_fang_wu = fit_line(xs, res_fw).first;
  return t;
}

RunSummary run(const ExperimentConfig& cfg, const RunOptions& options) {
  Collected col;
  RunSummary sum;
  if (cfg.bounds) bounds_section(cfg, col);
  if (cfg.asymptotics) asymptotics_section(cfg, col, sum);
  if (!options.bounds_only) {
    for (const auto& e : cfg.experiments) experiment_section(cfg, e, col, sum);
    for (const auto& g : cfg.gradient_checks) gradient_section(cfg, g, col, sum);
    for (const auto& m : cfg.martingale_checks) martingale_section(cfg, m, col, sum);
  }

  const std::filesystem::path dir(options.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / cfg.outputs.resolved, cfg.resolved.dump(2) + "\n");
  if (cfg.bounds) {
    write_file(dir / cfg.outputs.bounds, col.bounds_csv);
    write_file(dir / cfg.outputs.h_curve, col.h_curve);
  }
  if (cfg.asymptotics) write_file(dir / cfg.outputs.asymptotics, col.asymptotics_csv);
  if (!col.ratio_curve.empty()) write_file(dir / cfg.outputs.ratio_curve, col.ratio_curve);
  std::string lines;
  for (const auto& r : col.records) lines += r.dump() + "\n";
  write_file(dir / cfg.outputs.checks, lines);

  sum.exit_code = sum.failed > 0 ? kCheckFailed : kOk;
  return sum;
}

}  // namespace pathgap::cli
