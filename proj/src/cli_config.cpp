#include <algorithm>
#include <cmath>
#include <set>

#include "pathgap/cli.hpp"

namespace pathgap::cli {

using json = nlohmann::ordered_json;

namespace {

// Field access with path-qualified diagnostics.
class Context {
 public:
  Context(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    throw ConfigError(source_ + ":" + std::to_string(line_of(path)) + ": field '" + path + "': " + message);
  }

 private:
  // Line of the innermost key of `path`, found by locating each key in turn.
  int line_of(const std::string& path) const {
    std::size_t pos = 0;
    std::size_t start = 0;
    while (start <= path.size()) {
      std::size_t end = path.find_first_of(".[", start);
      if (end == std::string::npos) end = path.size();
      const std::string key = path.substr(start, end - start);
      if (!key.empty() && key.back() != ']') {
        const std::size_t found = text_.find("\"" + key + "\"", pos);
        if (found != std::string::npos) pos = found;
      }
      if (end < path.size() && path[end] == '[') {
        end = path.find(']', end);
        if (end == std::string::npos) break;
        ++end;
      }
      start = end + 1;
    }
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
  }

  const std::string& text_;
  std::string source_;
};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void allow_keys(const Context& ctx, const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) ctx.fail(path.empty() ? "<root>" : path, "must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) ctx.fail(join(path, key), "unknown field");
  }
}

double number(const Context& ctx, const json& j, const std::string& path, const std::string& key,
              std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    ctx.fail(join(path, key), "is required");
  }
  const json& v = j.at(key);
  if (!v.is_number()) ctx.fail(join(path, key), "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) ctx.fail(join(path, key), "must be finite");
  return x;
}

long long integer(const Context& ctx, const json& j, const std::string& path, const std::string& key,
                  std::optional<long long> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    ctx.fail(join(path, key), "is required");
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) ctx.fail(join(path, key), "must be an integer");
  return v.get<long long>();
}

std::string string(const Context& ctx, const json& j, const std::string& path, const std::string& key,
                   std::optional<std::string> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    ctx.fail(join(path, key), "is required");
  }
  const json& v = j.at(key);
  if (!v.is_string()) ctx.fail(join(path, key), "must be a string");
  return v.get<std::string>();
}

bool boolean(const Context& ctx, const json& j, const std::string& path, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) ctx.fail(join(path, key), "must be true or false");
  return j.at(key).get<bool>();
}

std::vector<double> numbers(const Context& ctx, const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) ctx.fail(join(path, key), "is required");
  const json& v = j.at(key);
  if (!v.is_array() || v.empty()) ctx.fail(join(path, key), "must be a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
      ctx.fail(join(path, key) + "[" + std::to_string(i) + "]", "must be a finite number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

Vec to_vec(const std::vector<double>& xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
  return v;
}

std::vector<double> positive_times(const Context& ctx, const json& j, const std::string& path,
                                   const std::string& key) {
  std::vector<double> T = numbers(ctx, j, path, key);
  for (double t : T) {
    if (!(t > 0.0)) ctx.fail(join(path, key), "horizons must be positive");
  }
  return T;
}

ManifoldModel parse_model(const Context& ctx, const json& j, const std::string& path, json& out) {
  if (!j.is_object()) ctx.fail(path, "must be an object");
  const std::string kind = string(ctx, j, path, "kind");
  out = json::object();
  out["kind"] = kind;
  try {
    if (kind == "euclidean") {
      allow_keys(ctx, j, path, {"kind", "dim"});
      const int d = static_cast<int>(integer(ctx, j, path, "dim"));
      out["dim"] = d;
      return ManifoldModel::euclidean(d);
    }
    if (kind == "sphere") {
      allow_keys(ctx, j, path, {"kind", "dim", "radius"});
      const int d = static_cast<int>(integer(ctx, j, path, "dim"));
      const double r = number(ctx, j, path, "radius", 1.0);
      out["dim"] = d;
      out["radius"] = r;
      return ManifoldModel::sphere(d, r);
    }
    if (kind == "hyperbolic") {
      allow_keys(ctx, j, path, {"kind", "dim", "curvature"});
      const int d = static_cast<int>(integer(ctx, j, path, "dim"));
      const double k = number(ctx, j, path, "curvature", -1.0);
      out["dim"] = d;
      out["curvature"] = k;
      return ManifoldModel::hyperbolic(d, k);
    }
    if (kind == "ricci_flow_sphere") {
      allow_keys(ctx, j, path, {"kind", "dim", "horizon"});
      const int d = static_cast<int>(integer(ctx, j, path, "dim"));
      const double T = number(ctx, j, path, "horizon");
      out["dim"] = d;
      out["horizon"] = T;
      return ManifoldModel::ricci_flow_sphere(d, T);
    }
    if (kind == "evolving_sphere") {
      allow_keys(ctx, j, path, {"kind", "dim", "phi2_knots", "phi2_values"});
      const int d = static_cast<int>(integer(ctx, j, path, "dim"));
      const auto knots = numbers(ctx, j, path, "phi2_knots");
      const auto values = numbers(ctx, j, path, "phi2_values");
      out["dim"] = d;
      out["phi2_knots"] = knots;
      out["phi2_values"] = values;
      return ManifoldModel::evolving_sphere(d, TimeCurve::piecewise_linear(knots, values));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    ctx.fail(path, e.what());
  }
  ctx.fail(join(path, "kind"), "unknown model '" + kind +
                                   "' (euclidean, sphere, hyperbolic, ricci_flow_sphere, evolving_sphere)");
}

DriftField parse_drift(const Context& ctx, const json& j, const std::string& path, int ambient, json& out) {
  if (!j.is_object()) ctx.fail(path, "must be an object");
  const std::string kind = string(ctx, j, path, "kind", std::string("zero"));
  out = json::object();
  out["kind"] = kind;
  if (kind == "zero") {
    allow_keys(ctx, j, path, {"kind"});
    return DriftField::zero();
  }
  if (kind == "ornstein_uhlenbeck") {
    allow_keys(ctx, j, path, {"kind", "lambda"});
    const double l = number(ctx, j, path, "lambda", 1.0);
    out["lambda"] = l;
    return DriftField::ornstein_uhlenbeck(ambient, l);
  }
  if (kind == "linear") {
    allow_keys(ctx, j, path, {"kind", "matrix"});
    const std::string mp = join(path, "matrix");
    const std::string shape = std::to_string(ambient) + "x" + std::to_string(ambient);
    if (!j.contains("matrix") || !j["matrix"].is_array() || j["matrix"].size() != static_cast<std::size_t>(ambient)) {
      ctx.fail(mp, "must be a " + shape + " array of rows");
    }
    Mat A(ambient, ambient);
    for (int r = 0; r < ambient; ++r) {
      const json& row = j["matrix"][static_cast<std::size_t>(r)];
      const std::string rp = mp + "[" + std::to_string(r) + "]";
      if (!row.is_array() || row.size() != static_cast<std::size_t>(ambient)) ctx.fail(rp, "must have " + std::to_string(ambient) + " entries");
      for (int c = 0; c < ambient; ++c) {
        const json& v = row[static_cast<std::size_t>(c)];
        if (!v.is_number() || !std::isfinite(v.get<double>())) ctx.fail(rp, "entries must be finite numbers");
        A(r, c) = v.get<double>();
      }
    }
    out["matrix"] = j["matrix"];
    return DriftField::linear(A);
  }
  if (kind == "height_gradient") {
    allow_keys(ctx, j, path, {"kind", "direction", "lambda", "radius"});
    const auto a = numbers(ctx, j, path, "direction");
    const double l = number(ctx, j, path, "lambda");
    const double r = number(ctx, j, path, "radius", 1.0);
    out["direction"] = a;
    out["lambda"] = l;
    out["radius"] = r;
    return DriftField::height_gradient(to_vec(a), l, r);
  }
  ctx.fail(join(path, "kind"), "unknown drift '" + kind + "' (zero, ornstein_uhlenbeck, linear, height_gradient)");
}

BaseFunction parse_function(const Context& ctx, const json& j, const std::string& path, int ambient, json& out) {
  if (!j.is_object()) ctx.fail(path, "must be an object");
  const std::string kind = string(ctx, j, path, "kind");
  out = json::object();
  out["kind"] = kind;
  auto vector_field = [&](const char* key) {
    const auto v = numbers(ctx, j, path, key);
    if (v.size() != static_cast<std::size_t>(ambient)) {
      ctx.fail(join(path, key), "must have " + std::to_string(ambient) + " ambient coordinates");
    }
    out[key] = v;
    return to_vec(v);
  };
  if (kind == "linear") {
    allow_keys(ctx, j, path, {"kind", "v"});
    return BaseFunction::linear(vector_field("v"));
  }
  if (kind == "exp_linear") {
    allow_keys(ctx, j, path, {"kind", "v", "scale"});
    const Vec v = vector_field("v");
    const double scale = number(ctx, j, path, "scale", 1.0);
    out["scale"] = scale;
    return BaseFunction::exp_linear(v, scale);
  }
  if (kind == "tanh_linear") {
    allow_keys(ctx, j, path, {"kind", "v"});
    return BaseFunction::tanh_linear(vector_field("v"));
  }
  if (kind == "gaussian_bump") {
    allow_keys(ctx, j, path, {"kind", "center", "width"});
    const Vec c = vector_field("center");
    const double w = number(ctx, j, path, "width");
    if (!(w > 0.0)) ctx.fail(join(path, "width"), "must be positive");
    out["width"] = w;
    return BaseFunction::gaussian_bump(c, w);
  }
  if (kind == "constant") {
    allow_keys(ctx, j, path, {"kind", "value"});
    const double c = number(ctx, j, path, "value");
    out["value"] = c;
    return BaseFunction::constant(c);
  }
  ctx.fail(join(path, "kind"),
           "unknown function '" + kind + "' (linear, exp_linear, tanh_linear, gaussian_bump, constant)");
}

// Terms are placed at fractions of the horizon so one functional serves every T.
std::function<CylindricalFunction(double)> parse_functional(const Context& ctx, const json& j,
                                                             const std::string& path, int ambient, json& out) {
  allow_keys(ctx, j, path, {"form", "terms"});
  const std::string form = string(ctx, j, path, "form", std::string("sum"));
  if (form != "sum" && form != "product") ctx.fail(join(path, "form"), "must be 'sum' or 'product'");
  out = json::object();
  out["form"] = form;
  out["terms"] = json::array();
  const std::string tp = join(path, "terms");
  if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty()) {
    ctx.fail(tp, "must be a non-empty array");
  }
  std::vector<double> fractions;
  std::vector<BaseFunction> parts;
  for (std::size_t i = 0; i < j["terms"].size(); ++i) {
    const json& term = j["terms"][i];
    const std::string ip = tp + "[" + std::to_string(i) + "]";
    allow_keys(ctx, term, ip, {"time_fraction", "function"});
    const double f = number(ctx, term, ip, "time_fraction", 1.0);
    if (!(f > 0.0 && f <= 1.0)) ctx.fail(join(ip, "time_fraction"), "must lie in (0, 1]");
    if (!fractions.empty() && !(f > fractions.back())) {
      ctx.fail(join(ip, "time_fraction"), "must be strictly increasing");
    }
    if (!term.contains("function")) ctx.fail(join(ip, "function"), "is required");
    json fo;
    parts.push_back(parse_function(ctx, term["function"], join(ip, "function"), ambient, fo));
    fractions.push_back(f);
    json t = json::object();
    t["time_fraction"] = f;
    t["function"] = fo;
    out["terms"].push_back(t);
  }
  const bool product = form == "product";
  return [fractions, parts, product](double T) {
    std::vector<double> times;
    for (double f : fractions) times.push_back(f * T);
    return product ? CylindricalFunction::product(times, parts) : CylindricalFunction::sum(times, parts);
  };
}

std::optional<ConstantPinching> parse_pinching(const Context& ctx, const json& j, const std::string& path,
                                               json& out) {
  if (!j.contains("pinching")) return std::nullopt;
  const std::string pp = join(path, "pinching");
  allow_keys(ctx, j["pinching"], pp, {"k1", "k2"});
  const double k1 = number(ctx, j["pinching"], pp, "k1");
  const double k2 = number(ctx, j["pinching"], pp, "k2");
  if (k1 > k2) ctx.fail(pp, "needs k1 <= k2");
  out["pinching"] = {{"k1", k1}, {"k2", k2}};
  return ConstantPinching(k1, k2);
}

// Model, drift, start point and functional, either from a built-in scenario or spelled out.
Scenario parse_setup(const Context& ctx, const json& j, const std::string& path, json& out, bool need_functional) {
  if (j.contains("scenario")) {
    const std::string name = string(ctx, j, path, "scenario");
    out["scenario"] = name;
    try {
      return find_scenario(name);
    } catch (const DomainError& e) {
      ctx.fail(join(path, "scenario"), e.what());
    }
  }
  if (!j.contains("model")) ctx.fail(join(path, "model"), "is required unless a scenario is named");
  Scenario sc;
  sc.name = out.contains("name") ? out["name"].get<std::string>() : std::string("custom");
  json mo, dr;
  sc.model = parse_model(ctx, j["model"], join(path, "model"), mo);
  out["model"] = mo;
  sc.drift = parse_drift(ctx, j.contains("drift") ? j["drift"] : json::object(), join(path, "drift"),
                         sc.model.ambient_dim(), dr);
  out["drift"] = dr;
  try {
    sc.drift.check_compatible(sc.model);
  } catch (const Error& e) {
    ctx.fail(join(path, "drift"), e.what());
  }
  if (j.contains("start")) {
    const auto x = numbers(ctx, j, path, "start");
    sc.x0 = to_vec(x);
    if (sc.x0.size() != sc.model.ambient_dim() || !sc.model.on_manifold(sc.x0, 1e-9)) {
      ctx.fail(join(path, "start"), "is not a point of " + sc.model.describe());
    }
  } else {
    sc.x0 = sc.model.base_point();
  }
  out["start"] = std::vector<double>(sc.x0.data(), sc.x0.data() + sc.x0.size());
  sc.description = sc.model.describe();
  if (need_functional) {
    if (!j.contains("functional")) ctx.fail(join(path, "functional"), "is required");
    json fo;
    sc.functional = parse_functional(ctx, j["functional"], join(path, "functional"), sc.model.ambient_dim(), fo);
    out["functional"] = fo;
  }
  return sc;
}

void check_declared(const Context& ctx, const std::string& path, const Scenario& sc, double T,
                    const std::optional<ConstantPinching>& declared, std::uint64_t seed) {
  if (!declared) return;
  try {
    check_pinching(sc.model, sc.drift, T, TimeCurve::constant(declared->k1), TimeCurve::constant(declared->k2), seed,
                   2000);
  } catch (const CertificateError& e) {
    ctx.fail(join(path, "pinching"), e.what());
  }
}

void reject_with_scenario(const Context& ctx, const json& j, const std::string& path) {
  for (const char* key : {"model", "drift", "start", "functional"}) {
    if (j.contains(key)) ctx.fail(join(path, key), "cannot be combined with a named scenario");
  }
}

ExperimentSpec parse_experiment(const Context& ctx, const json& j, const std::string& path, std::uint64_t seed,
                                json& out) {
  allow_keys(ctx, j, path, {"name", "scenario", "model", "drift", "start", "functional", "pinching", "T", "checks"});
  ExperimentSpec e;
  out = json::object();
  const bool builtin = j.contains("scenario");
  if (builtin) reject_with_scenario(ctx, j, path);
  e.name = string(ctx, j, path, "name", builtin ? j["scenario"].get<std::string>() : std::string("experiment"));
  out["name"] = e.name;
  e.scenario = parse_setup(ctx, j, path, out, true);
  e.scenario.name = e.name;
  e.T = positive_times(ctx, j, path, "T");
  out["T"] = e.T;
  e.declared = parse_pinching(ctx, j, path, out);
  for (double T : e.T) check_declared(ctx, path, e.scenario, T, e.declared, seed);
  if (e.declared && e.scenario.model.is_evolving()) {
    ctx.fail(join(path, "pinching"), "declared pinching is only supported on static models");
  }
  std::vector<std::string> checks{"poincare", "log_sobolev", "chains"};
  if (j.contains("checks")) {
    const std::string cp = join(path, "checks");
    if (!j["checks"].is_array()) ctx.fail(cp, "must be an array of check names");
    checks.clear();
    for (const auto& c : j["checks"]) {
      if (!c.is_string()) ctx.fail(cp, "must be an array of check names");
      const std::string name = c.get<std::string>();
      if (name != "poincare" && name != "log_sobolev" && name != "chains") {
        ctx.fail(cp, "unknown check '" + name + "' (poincare, log_sobolev, chains)");
      }
      checks.push_back(name);
    }
  }
  e.poincare = std::count(checks.begin(), checks.end(), "poincare") > 0;
  e.log_sobolev = std::count(checks.begin(), checks.end(), "log_sobolev") > 0;
  e.chains = std::count(checks.begin(), checks.end(), "chains") > 0;
  out["checks"] = checks;
  return e;
}

GradientCheckSpec parse_gradient_check(const Context& ctx, const json& j, const std::string& path,
                                       const ExperimentConfig& cfg, json& out) {
  allow_keys(ctx, j, path,
             {"name", "type", "model", "drift", "start", "function", "t", "c", "pinching", "n_paths", "eps_factor"});
  GradientCheckSpec g;
  out = json::object();
  g.name = string(ctx, j, path, "name", std::string("gradient_check"));
  out["name"] = g.name;
  const std::string type = string(ctx, j, path, "type", std::string("gradient_estimate"));
  if (type != "gradient_estimate" && type != "second_characterization") {
    ctx.fail(join(path, "type"), "must be 'gradient_estimate' or 'second_characterization'");
  }
  g.second = type == "second_characterization";
  out["type"] = type;
  const Scenario sc = parse_setup(ctx, j, path, out, false);
  g.model = sc.model;
  g.drift = sc.drift;
  g.point = sc.x0;
  if (!j.contains("function")) ctx.fail(join(path, "function"), "is required");
  json fo;
  g.function = parse_function(ctx, j["function"], join(path, "function"), g.model.ambient_dim(), fo);
  out["function"] = fo;
  g.t = number(ctx, j, path, "t");
  if (g.t < 0.0 || (g.second && g.t == 0.0)) ctx.fail(join(path, "t"), g.second ? "must be positive" : "must be >= 0");
  out["t"] = g.t;
  g.c = number(ctx, j, path, "c", 0.0);
  out["c"] = g.c;
  if (g.model.is_evolving()) ctx.fail(join(path, "model"), "semigroup checks need a static model");
  const auto declared = parse_pinching(ctx, j, path, out);
  if (declared) {
    check_declared(ctx, path, sc, std::max(g.t, 1e-6), declared, cfg.seed);
    g.pinching = *declared;
  } else {
    const auto cert = pinching(g.model, g.drift, std::max(g.t, 1e-6), cfg.seed, 64);
    g.pinching = ConstantPinching(cert.k1(0.0), cert.k2(0.0));
    out["pinching"] = {{"k1", g.pinching.k1}, {"k2", g.pinching.k2}};
  }
  const long long n = integer(ctx, j, path, "n_paths", cfg.simulation.n_paths);
  if (n < 2) ctx.fail(join(path, "n_paths"), "must be at least 2");
  out["n_paths"] = n;
  g.options.n_paths = static_cast<int>(n);
  g.options.eps_factor = number(ctx, j, path, "eps_factor", 1e-3);
  if (!(g.options.eps_factor > 0.0)) ctx.fail(join(path, "eps_factor"), "must be positive");
  out["eps_factor"] = g.options.eps_factor;
  g.options.max_step = cfg.simulation.max_step;
  g.options.scheme = cfg.simulation.scheme;
  g.options.seed = cfg.seed;
  return g;
}

MartingaleSpec parse_martingale(const Context& ctx, const json& j, const std::string& path,
                                const ExperimentConfig& cfg, json& out) {
  allow_keys(ctx, j, path,
             {"name", "scenario", "model", "drift", "start", "functional", "pinching", "T", "t1", "t2", "c",
              "outer_paths", "inner_paths", "experimental_entropy"});
  MartingaleSpec m;
  out = json::object();
  m.name = string(ctx, j, path, "name", std::string("martingale"));
  out["name"] = m.name;
  if (j.contains("scenario")) reject_with_scenario(ctx, j, path);
  m.scenario = parse_setup(ctx, j, path, out, !j.contains("scenario"));
  m.T = number(ctx, j, path, "T", 1.0);
  if (!(m.T > 0.0)) ctx.fail(join(path, "T"), "must be positive");
  out["T"] = m.T;
  m.t1 = number(ctx, j, path, "t1");
  m.t2 = number(ctx, j, path, "t2");
  if (!(0.0 <= m.t1 && m.t1 <= m.t2 && m.t2 <= m.T)) ctx.fail(join(path, "t2"), "needs 0 <= t1 <= t2 <= T");
  out["t1"] = m.t1;
  out["t2"] = m.t2;
  m.c = number(ctx, j, path, "c", 0.0);
  out["c"] = m.c;
  m.declared = parse_pinching(ctx, j, path, out);
  check_declared(ctx, path, m.scenario, m.T, m.declared, cfg.seed);
  const long long outer = integer(ctx, j, path, "outer_paths", 1000);
  const long long inner = integer(ctx, j, path, "inner_paths", 128);
  if (outer < 2) ctx.fail(join(path, "outer_paths"), "must be at least 2");
  if (inner < 2) ctx.fail(join(path, "inner_paths"), "must be at least 2");
  m.outer_paths = static_cast<int>(outer);
  m.nested.inner_paths = static_cast<int>(inner);
  m.nested.experimental_entropy = boolean(ctx, j, path, "experimental_entropy", false);
  m.nested.max_work = cfg.simulation.max_work;
  out["outer_paths"] = outer;
  out["inner_paths"] = inner;
  out["experimental_entropy"] = m.nested.experimental_entropy;
  return m;
}

template <typename Parse>
void parse_list(const Context& ctx, const json& root, const char* key, json& resolved, Parse&& parse) {
  resolved[key] = json::array();
  if (!root.contains(key)) return;
  if (!root[key].is_array()) ctx.fail(key, "must be an array");
  for (std::size_t i = 0; i < root[key].size(); ++i) {
    json out;
    parse(root[key][i], std::string(key) + "[" + std::to_string(i) + "]", out);
    resolved[key].push_back(out);
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const Overrides& overrides, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte > 0 ? byte - 1 : 0), '\n');
    throw ConfigError(source + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  const Context ctx(text, source);
  allow_keys(ctx, root, "",
             {"schema_version", "name", "seed", "simulation", "verdict", "bound_policy", "bounds", "asymptotics",
              "experiments", "gradient_checks", "martingale_checks", "outputs"});
  ExperimentConfig cfg;
  json& r = cfg.resolved;
  const long long version = integer(ctx, root, "", "schema_version");
  if (version != kSchemaVersion) {
    ctx.fail("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                   std::to_string(kSchemaVersion) + ")");
  }
  r["schema_version"] = version;
  cfg.name = string(ctx, root, "", "name", std::string("experiment"));
  r["name"] = cfg.name;
  if (root.contains("seed") && !root["seed"].is_number_unsigned() && !root["seed"].is_number_integer()) {
    ctx.fail("seed", "must be a non-negative integer");
  }
  if (root.contains("seed") && root["seed"].is_number_integer() && root["seed"].get<long long>() < 0) {
    ctx.fail("seed", "must be a non-negative integer");
  }
  cfg.seed = overrides.seed ? *overrides.seed : root.value("seed", std::uint64_t{1});
  r["seed"] = cfg.seed;

  const json sim = root.contains("simulation") ? root["simulation"] : json::object();
  allow_keys(ctx, sim, "simulation", {"n_paths", "max_step", "batch_paths", "scheme", "max_work"});
  const long long n_paths = overrides.n_paths ? *overrides.n_paths : integer(ctx, sim, "simulation", "n_paths", 100000);
  if (n_paths < 2) ctx.fail("simulation.n_paths", "must be at least 2");
  cfg.simulation.n_paths = static_cast<int>(n_paths);
  cfg.simulation.max_step = number(ctx, sim, "simulation", "max_step", 1.0 / 256.0);
  if (!(cfg.simulation.max_step > 0.0 && cfg.simulation.max_step <= 0.1)) {
    ctx.fail("simulation.max_step", "must lie in (0, 0.1]");
  }
  const long long batch = integer(ctx, sim, "simulation", "batch_paths", 2048);
  if (batch < 1) ctx.fail("simulation.batch_paths", "must be positive");
  cfg.simulation.batch_paths = static_cast<int>(batch);
  const std::string scheme = string(ctx, sim, "simulation", "scheme", std::string("geodesic_heun"));
  if (scheme == "geodesic_heun") {
    cfg.simulation.scheme = Scheme::GeodesicHeun;
  } else if (scheme == "geodesic_euler") {
    cfg.simulation.scheme = Scheme::GeodesicEuler;
  } else {
    ctx.fail("simulation.scheme", "must be 'geodesic_euler' or 'geodesic_heun'");
  }
  cfg.simulation.max_work = number(ctx, sim, "simulation", "max_work", 4e9);
  if (!(cfg.simulation.max_work > 0.0)) ctx.fail("simulation.max_work", "must be positive");
  r["simulation"] = {{"n_paths", cfg.simulation.n_paths},
                     {"max_step", cfg.simulation.max_step},
                     {"batch_paths", cfg.simulation.batch_paths},
                     {"scheme", scheme},
                     {"max_work", cfg.simulation.max_work}};

  const json ver = root.contains("verdict") ? root["verdict"] : json::object();
  allow_keys(ctx, ver, "verdict", {"margin_sigmas", "noise_fraction"});
  cfg.verdict.margin_sigmas = number(ctx, ver, "verdict", "margin_sigmas", 3.0);
  cfg.verdict.noise_fraction = number(ctx, ver, "verdict", "noise_fraction", 0.3);
  if (!(cfg.verdict.margin_sigmas >= 0.0)) ctx.fail("verdict.margin_sigmas", "must be non-negative");
  if (!(cfg.verdict.noise_fraction > 0.0)) ctx.fail("verdict.noise_fraction", "must be positive");
  r["verdict"] = {{"margin_sigmas", cfg.verdict.margin_sigmas}, {"noise_fraction", cfg.verdict.noise_fraction}};

  const json bp = root.contains("bound_policy") ? root["bound_policy"] : json::object();
  allow_keys(ctx, bp, "bound_policy", {"mode", "t_grid", "refinement_iters", "tol", "c_knots", "c_range"});
  const std::string mode = string(ctx, bp, "bound_policy", "mode", std::string("closed_form"));
  if (mode == "closed_form") {
    cfg.bound_policy.mode = SearchPolicy::Mode::ClosedFormOnly;
  } else if (mode == "optimize_c") {
    cfg.bound_policy.mode = SearchPolicy::Mode::OptimizeC;
  } else {
    ctx.fail("bound_policy.mode", "must be 'closed_form' or 'optimize_c'");
  }
  cfg.bound_policy.t_grid = static_cast<int>(integer(ctx, bp, "bound_policy", "t_grid", 256));
  cfg.bound_policy.refinement_iters = static_cast<int>(integer(ctx, bp, "bound_policy", "refinement_iters", 40));
  cfg.bound_policy.tol = number(ctx, bp, "bound_policy", "tol", 1e-9);
  cfg.bound_policy.c_knots = static_cast<int>(integer(ctx, bp, "bound_policy", "c_knots", 0));
  std::vector<double> c_range{0.0, 0.0};
  if (bp.contains("c_range")) {
    c_range = numbers(ctx, bp, "bound_policy", "c_range");
    if (c_range.size() != 2) ctx.fail("bound_policy.c_range", "must be [lo, hi]");
  }
  cfg.bound_policy.c_range = {c_range[0], c_range[1]};
  try {
    cfg.bound_policy.validate();
  } catch (const Error& e) {
    ctx.fail("bound_policy", e.what());
  }
  r["bound_policy"] = {{"mode", mode},
                       {"t_grid", cfg.bound_policy.t_grid},
                       {"refinement_iters", cfg.bound_policy.refinement_iters},
                       {"tol", cfg.bound_policy.tol},
                       {"c_knots", cfg.bound_policy.c_knots},
                       {"c_range", c_range}};

  if (root.contains("bounds")) {
    const json& b = root["bounds"];
    allow_keys(ctx, b, "bounds", {"k1", "k2", "T"});
    BoundsSweep s{number(ctx, b, "bounds", "k1"), number(ctx, b, "bounds", "k2"),
                  positive_times(ctx, b, "bounds", "T")};
    if (s.k1 > s.k2) ctx.fail("bounds.k2", "needs k1 <= k2");
    r["bounds"] = {{"k1", s.k1}, {"k2", s.k2}, {"T", s.T}};
    cfg.bounds = s;
  }
  if (root.contains("asymptotics")) {
    const json& a = root["asymptotics"];
    allow_keys(ctx, a, "asymptotics", {"k1", "k2", "T"});
    AsymptoticsRequest s{number(ctx, a, "asymptotics", "k1"), number(ctx, a, "asymptotics", "k2"),
                         positive_times(ctx, a, "asymptotics", "T")};
    if (s.k1 > s.k2) ctx.fail("asymptotics.k2", "needs k1 <= k2");
    for (double t : s.T) {
      if (t > 0.1) ctx.fail("asymptotics.T", "short-time grid must lie in (0, 0.1]");
    }
    r["asymptotics"] = {{"k1", s.k1}, {"k2", s.k2}, {"T", s.T}};
    cfg.asymptotics = s;
  }
  parse_list(ctx, root, "experiments", r, [&](const json& j, const std::string& path, json& out) {
    cfg.experiments.push_back(parse_experiment(ctx, j, path, cfg.seed, out));
  });
  parse_list(ctx, root, "gradient_checks", r, [&](const json& j, const std::string& path, json& out) {
    cfg.gradient_checks.push_back(parse_gradient_check(ctx, j, path, cfg, out));
  });
  parse_list(ctx, root, "martingale_checks", r, [&](const json& j, const std::string& path, json& out) {
    cfg.martingale_checks.push_back(parse_martingale(ctx, j, path, cfg, out));
  });

  const json outs = root.contains("outputs") ? root["outputs"] : json::object();
  allow_keys(ctx, outs, "outputs", {"bounds", "checks", "h_curve", "ratio_curve", "asymptotics", "resolved"});
  OutputNames& o = cfg.outputs;
  for (auto [key, field] : {std::pair<const char*, std::string*>{"bounds", &o.bounds},
                            {"checks", &o.checks},
                            {"h_curve", &o.h_curve},
                            {"ratio_curve", &o.ratio_curve},
                            {"asymptotics", &o.asymptotics},
                            {"resolved", &o.resolved}}) {
    *field = string(ctx, outs, "outputs", key, *field);
    if (field->empty() || field->find('/') != std::string::npos) {
      ctx.fail(std::string("outputs.") + key, "must be a plain file name");
    }
    r["outputs"][key] = *field;
  }
  return cfg;
}

}  // namespace pathgap::cli
