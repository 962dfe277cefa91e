#include "pathgap/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pathgap/expfun.hpp"
#include "pathgap/optimize.hpp"
#include "pathgap/rng.hpp"

namespace pathgap {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

namespace {

Verdict decide_scaled(double difference, double difference_se, double abs_tol, double scale,
                      const VerdictPolicy& policy) {
  if (difference > policy.margin_sigmas * difference_se + abs_tol) return Verdict::Fail;
  if (difference_se > policy.noise_fraction * scale) return Verdict::Inconclusive;
  return Verdict::Pass;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void finish(InequalityCheck& c, const std::vector<double>& influence, double scale, const VerdictPolicy& policy) {
  c.difference = c.lhs.mean - c.rhs.mean;
  c.difference_se = summarize(influence).std_error;
  c.margin_sigmas = policy.margin_sigmas;
  c.verdict = decide_scaled(c.difference, c.difference_se, c.abs_tol, scale, policy);
}

}  // namespace

Verdict decide(double lhs, double rhs, double difference, double difference_se, double abs_tol,
               const VerdictPolicy& policy) {
  return decide_scaled(difference, difference_se, abs_tol, std::max(std::abs(lhs), std::abs(rhs)), policy);
}

RayleighQuotient rayleigh_quotient(const std::vector<double>& values, const std::vector<double>& energies) {
  if (values.size() != energies.size()) throw DimensionError("values and energies differ in length");
  RayleighQuotient q;
  q.variance = variance_of(values);
  q.energy = summarize(energies);
  if (!(q.energy.mean > 0.0)) throw DomainError("the Rayleigh quotient needs a positive energy");
  q.ratio = q.variance.mean / q.energy.mean;
  const double mu = mean_of(values);
  std::vector<double> infl(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    infl[i] = (values[i] - mu) * (values[i] - mu) - q.ratio * energies[i];
  }
  q.ratio_std_error = summarize(infl).std_error / q.energy.mean;
  return q;
}

RayleighQuotient rayleigh_quotient(const CylindricalFunction& F, const PathEnsemble& ensemble) {
  return rayleigh_quotient(path_values(F, ensemble), path_energies(F, ensemble, GradientKind::Intrinsic));
}

InequalityCheck check_poincare(const std::vector<double>& values, const std::vector<double>& energies, double H,
                               const VerdictPolicy& policy) {
  if (values.size() != energies.size()) throw DimensionError("values and energies differ in length");
  InequalityCheck c;
  c.name = "poincare";
  c.lhs = variance_of(values);
  const EnergyEstimate e = summarize(energies);
  c.rhs = {H * e.mean, H * e.std_error, e.n_paths, 0.0};
  c.extras["H"] = H;
  const double mu = mean_of(values);
  std::vector<double> infl(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) infl[i] = (values[i] - mu) * (values[i] - mu) - H * energies[i];
  c.abs_tol = 1e-10 * (std::abs(c.lhs.mean) + std::abs(c.rhs.mean));
  finish(c, infl, std::max(std::abs(c.lhs.mean), std::abs(c.rhs.mean)), policy);
  if (e.mean <= 1e-14 && c.lhs.mean <= 1e-14) {
    c.degenerate = true;
    c.verdict = Verdict::Pass;
  } else if (e.mean > 0.0) {
    const RayleighQuotient q = rayleigh_quotient(values, energies);
    c.extras["ratio"] = q.ratio;
    c.extras["ratio_se"] = q.ratio_std_error;
  }
  return c;
}

InequalityCheck check_poincare(const CylindricalFunction& F, const PathEnsemble& ensemble, double H,
                               const VerdictPolicy& policy) {
  return check_poincare(path_values(F, ensemble), path_energies(F, ensemble, GradientKind::Intrinsic), H, policy);
}

InequalityCheck check_poincare(const CylindricalFunction& F, const PathEnsemble& ensemble, const BoundReport& bound,
                               const VerdictPolicy& policy) {
  return check_poincare(F, ensemble, bound.h, policy);
}

InequalityCheck check_log_sobolev(const std::vector<double>& values, const std::vector<double>& energies, double H,
                                  const VerdictPolicy& policy) {
  if (values.size() != energies.size()) throw DimensionError("values and energies differ in length");
  InequalityCheck c;
  c.name = "log_sobolev";
  c.lhs = entropy_of(values, true);
  const EnergyEstimate e = summarize(energies);
  c.rhs = {2.0 * H * e.mean, 2.0 * H * e.std_error, e.n_paths, 0.0};
  c.extras["H"] = H;
  c.extras["entropy_bias"] = c.lhs.bias;
  double m = 0.0;
  for (double v : values) m += v * v;
  m /= static_cast<double>(std::max<std::size_t>(1, values.size()));
  const double slope = m > 0.0 ? std::log(m) + 1.0 : 0.0;
  std::vector<double> infl(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = values[i] * values[i];
    infl[i] = (g > 0.0 ? g * std::log(g) : 0.0) - slope * g - 2.0 * H * energies[i];
  }
  c.abs_tol = 1e-10 * (std::abs(c.lhs.mean) + std::abs(c.rhs.mean));
  finish(c, infl, std::max(std::abs(c.lhs.mean), std::abs(c.rhs.mean)), policy);
  if (e.mean <= 1e-14 && std::abs(c.lhs.mean) <= 1e-12) {
    c.degenerate = true;
    c.verdict = Verdict::Pass;
  }
  return c;
}

InequalityCheck check_log_sobolev(const CylindricalFunction& F, const PathEnsemble& ensemble, double H,
                                  const VerdictPolicy& policy) {
  return check_log_sobolev(path_values(F, ensemble), path_energies(F, ensemble, GradientKind::Intrinsic), H, policy);
}

InequalityCheck check_log_sobolev(const CylindricalFunction& F, const PathEnsemble& ensemble,
                                  const BoundReport& bound, const VerdictPolicy& policy) {
  return check_log_sobolev(F, ensemble, bound.h, policy);
}

namespace {

// Monte Carlo pieces shared by the two semigroup characterizations.
struct SemigroupSample {
  int n = 0;
  int d = 0;
  double h = 0.0;
  double eps = 0.0;
  Vec c0;                              // frame coordinates of grad f(x)
  std::vector<std::vector<double>> g;  // g[a][p]: finite-difference quotient in direction a
  std::vector<double> grad_sq;         // |grad f(X_t)|^2
  std::vector<double> cross;           // <c0, //^{-1} grad f(X_t)> in frame coordinates
  std::vector<double> value;           // f(X_t)
  Vec G;                               // mean of g
  double grad_p_sq = 0.0;              // bias-corrected |grad P_t f|^2
};

SemigroupSample sample_semigroup(const ManifoldModel& model, const DriftField& drift, const BaseFunction& f,
                                 const Vec& x, double t, const GradientCheckOptions& o) {
  model.check_point(x);
  SemigroupSample s;
  s.d = model.dim();
  const Mat u0 = model.frame_at(0.0, x);
  s.c0 = u0.transpose() * model.metric_matrix(0.0) * f.gradient(model, 0.0, x);
  SimConfig cfg;
  cfg.T = t;
  cfg.steps = std::max(1, static_cast<int>(std::ceil(t / o.max_step - 1e-9)));
  cfg.n_paths = o.n_paths;
  cfg.seed = o.seed;
  cfg.stream = o.stream;
  cfg.scheme = o.scheme;
  cfg.record_stride = 0;
  s.h = cfg.step();
  s.n = o.n_paths;
  s.eps = o.eps_factor * std::sqrt(t);
  const auto base = simulate(model, drift, x, cfg, {});
  const std::size_t J = base.n_records() - 1;
  for (int p = 0; p < s.n; ++p) {
    const Vec y = base.point(p, J);
    const Vec gy = f.gradient(model, t, y);
    s.value.push_back(f.value(y));
    s.grad_sq.push_back(model.inner(t, gy, gy));
    s.cross.push_back(s.c0.dot(base.to_frame(p, J, gy)));
  }
  s.g.assign(static_cast<std::size_t>(s.d), std::vector<double>(static_cast<std::size_t>(s.n)));
  s.G = Vec::Zero(s.d);
  for (int a = 0; a < s.d; ++a) {
    const Vec dir = u0.col(a);
    const auto plus = simulate(model, drift, model.geodesic_step(x, s.eps * dir).x, cfg, {});
    const auto minus = simulate(model, drift, model.geodesic_step(x, -s.eps * dir).x, cfg, {});
    auto& ga = s.g[static_cast<std::size_t>(a)];
    for (int p = 0; p < s.n; ++p) {
      ga[static_cast<std::size_t>(p)] = (f.value(plus.point(p, J)) - f.value(minus.point(p, J))) / (2.0 * s.eps);
    }
    const EnergyEstimate e = summarize(ga);
    s.G[a] = e.mean;
    // E[g]^2 = mean^2 - Var/n.
    s.grad_p_sq += e.mean * e.mean - e.std_error * e.std_error;
  }
  return s;
}

double coefficient_integral(double rate, double t) { return expfun::decay_integral(rate, t); }

}  // namespace

InequalityCheck check_gradient_estimate(const ManifoldModel& model, const DriftField& drift, const BaseFunction& f,
                                        const Vec& x, double t, double c, const ConstantPinching& pin,
                                        const GradientCheckOptions& options, const VerdictPolicy& policy) {
  if (!(t >= 0.0)) throw DomainError("gradient estimate needs t >= 0");
  const double k = 0.5 * (pin.k1 + pin.k2), kt = 0.5 * (pin.k2 - pin.k1);
  const double A = (1.0 + 0.5 * kt * coefficient_integral(0.5 * pin.k1 - c, t)) *
                   (1.0 + 0.5 * kt * coefficient_integral(0.5 * pin.k1 + c - k, t)) * std::exp(-k * t);
  InequalityCheck chk;
  chk.name = "gradient_estimate";
  chk.extras["t"] = t;
  chk.extras["c"] = c;
  chk.extras["coefficient"] = A;
  if (t == 0.0) {
    const Vec g = f.gradient(model, 0.0, x);
    const double v = model.inner(0.0, g, g);
    chk.lhs = {v, 0.0, 0, 0.0};
    chk.rhs = {v, 0.0, 0, 0.0};
    chk.extras["p_t_f"] = f.value(x);
    chk.extras["p_t_f_se"] = 0.0;
    chk.degenerate = v == 0.0;
    return chk;
  }
  const SemigroupSample s = sample_semigroup(model, drift, f, x, t, options);
  std::vector<double> lhs_infl(static_cast<std::size_t>(s.n)), diff_infl(static_cast<std::size_t>(s.n));
  for (std::size_t p = 0; p < lhs_infl.size(); ++p) {
    double v = 0.0;
    for (int a = 0; a < s.d; ++a) v += 2.0 * s.G[a] * s.g[static_cast<std::size_t>(a)][p];
    lhs_infl[p] = v;
    diff_infl[p] = v - A * s.grad_sq[p];
  }
  chk.lhs = {s.grad_p_sq, summarize(lhs_infl).std_error, s.n, 0.0};
  const EnergyEstimate pg = summarize(s.grad_sq);
  chk.rhs = {A * pg.mean, A * pg.std_error, s.n, 0.0};
  const EnergyEstimate pf = summarize(s.value);
  chk.extras["p_t_f"] = pf.mean;
  chk.extras["p_t_f_se"] = pf.std_error;
  chk.extras["grad_p_t_f_sq"] = s.grad_p_sq;
  chk.extras["fd_step"] = s.eps;
  chk.abs_tol = 10.0 * s.h * std::max(std::abs(chk.lhs.mean), std::abs(chk.rhs.mean));
  // Noise is judged against |grad P_t f|^2 alone.
  finish(chk, diff_infl, std::abs(chk.lhs.mean), policy);
  if (pg.mean <= 1e-14 && std::abs(chk.lhs.mean) <= 1e-12) {
    chk.degenerate = true;
    chk.verdict = Verdict::Pass;
  }
  return chk;
}

InequalityCheck check_second_characterization(const ManifoldModel& model, const DriftField& drift,
                                              const BaseFunction& f, const Vec& x, double t, double c,
                                              const ConstantPinching& pin, const GradientCheckOptions& options,
                                              const VerdictPolicy& policy) {
  if (!(t > 0.0)) throw DomainError("second characterization needs t > 0");
  const double k = 0.5 * (pin.k1 + pin.k2), kt = 0.5 * (pin.k2 - pin.k1);
  const double I1 = coefficient_integral(0.5 * pin.k1 - c, t);
  const double A2 = (1.0 + 0.5 * kt * I1) * (1.0 + 0.5 * kt * coefficient_integral(c - 0.5 * pin.k2, t)) *
                    std::exp(-k * t);
  const double B = 4.0 * (1.0 + 0.25 * (pin.k2 - pin.k1) * I1) * std::exp(-0.5 * k * t);
  InequalityCheck chk;
  chk.name = "second_characterization";
  chk.extras["t"] = t;
  chk.extras["c"] = c;
  chk.extras["coefficient"] = A2;
  const SemigroupSample s = sample_semigroup(model, drift, f, x, t, options);
  const double grad0 = s.c0.squaredNorm();
  const double pg = mean_of(s.grad_sq);
  const double cross = mean_of(s.cross);
  const double lhs = s.grad_p_sq - A2 * pg;
  const double rhs = (pin.k2 - pin.k1) * I1 * grad0 + 4.0 * s.c0.dot(s.G) - B * cross;
  std::vector<double> lhs_infl(static_cast<std::size_t>(s.n)), rhs_infl(lhs_infl.size()), diff(lhs_infl.size());
  for (std::size_t p = 0; p < lhs_infl.size(); ++p) {
    double quad = 0.0, lin = 0.0;
    for (int a = 0; a < s.d; ++a) {
      quad += 2.0 * s.G[a] * s.g[static_cast<std::size_t>(a)][p];
      lin += 4.0 * s.c0[a] * s.g[static_cast<std::size_t>(a)][p];
    }
    lhs_infl[p] = quad - A2 * s.grad_sq[p];
    rhs_infl[p] = lin - B * s.cross[p];
    diff[p] = lhs_infl[p] - rhs_infl[p];
  }
  chk.lhs = {lhs, summarize(lhs_infl).std_error, s.n, 0.0};
  chk.rhs = {rhs, summarize(rhs_infl).std_error, s.n, 0.0};
  chk.extras["grad_p_t_f_sq"] = s.grad_p_sq;
  chk.extras["p_t_grad_f_sq"] = pg;
  chk.extras["transported_cross"] = cross;
  // Both sides may vanish identically; measure noise against the individual terms.
  const double scale = std::max({std::abs(s.grad_p_sq), A2 * pg, 4.0 * std::abs(s.c0.dot(s.G)), std::abs(B * cross),
                                 std::abs(lhs), std::abs(rhs)});
  chk.abs_tol = 10.0 * s.h * scale;
  finish(chk, diff, scale, policy);
  if (scale <= 1e-14) {
    chk.degenerate = true;
    chk.verdict = Verdict::Pass;
  }
  return chk;
}

namespace {

// Per outer path: estimate of E[F|F_t]^2 (or of m log m with m = E[F^2|F_t]).
std::vector<double> conditional_terms(const CylindricalFunction& F, const PathEnsemble& outer, double t, int which,
                                      const NestedOptions& o) {
  const auto& times = F.times();
  const std::size_t n_known = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t + 1e-12) -
                                                       times.begin());
  const std::size_t jt = outer.index_of(t);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n_known; ++i) idx.push_back(outer.index_of(times[i]));
  std::vector<double> out(static_cast<std::size_t>(outer.n_paths()));
  std::vector<Vec> xs(F.arity());
  if (n_known == F.arity()) {
    for (int p = 0; p < outer.n_paths(); ++p) {
      for (std::size_t i = 0; i < n_known; ++i) xs[i] = outer.point(p, idx[i]);
      const double v = F.value(xs);
      out[static_cast<std::size_t>(p)] = o.experimental_entropy ? (v * v > 0 ? v * v * std::log(v * v) : 0.0) : v * v;
    }
    return out;
  }
  const SimConfig& oc = outer.config();
  SimConfig cfg = oc;
  cfg.t0 = outer.partition()[jt];
  cfg.steps = static_cast<int>(std::lround((oc.T - cfg.t0) / oc.substep()));
  cfg.refine_level = 0;
  cfg.record_stride = 0;
  cfg.n_paths = o.inner_paths;
  cfg.path_offset = 0;
  cfg.max_work = o.max_work;
  const std::vector<double> future(times.begin() + static_cast<std::ptrdiff_t>(n_known), times.end());
  for (int p = 0; p < outer.n_paths(); ++p) {
    cfg.seed = splitmix64(oc.seed ^ splitmix64(static_cast<std::uint64_t>(which)));
    cfg.stream = splitmix64(oc.stream + 0x1000 + oc.path_offset + static_cast<std::uint64_t>(p));
    const auto inner = simulate(outer.model(), outer.drift(), outer.point(p, jt), cfg, future);
    for (std::size_t i = 0; i < n_known; ++i) xs[i] = outer.point(p, idx[i]);
    std::vector<double> v(static_cast<std::size_t>(o.inner_paths));
    for (int q = 0; q < o.inner_paths; ++q) {
      for (std::size_t i = n_known; i < F.arity(); ++i) xs[i] = inner.point(q, inner.index_of(times[i]));
      const double f = F.value(xs);
      v[static_cast<std::size_t>(q)] = o.experimental_entropy ? f * f : f;
    }
    const EnergyEstimate e = summarize(v);
    out[static_cast<std::size_t>(p)] = o.experimental_entropy
                                           ? (e.mean > 0.0 ? e.mean * std::log(e.mean) : 0.0)
                                           : e.mean * e.mean - e.std_error * e.std_error;
  }
  return out;
}

template <typename F>
double simpson(F&& f, double a, double b, int panels) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

InequalityCheck check_martingale_decomposition(const CylindricalFunction& F, const PathEnsemble& outer, double t1,
                                               double t2, double c, const PinchingCertificate& pin,
                                               const NestedOptions& options, const VerdictPolicy& policy) {
  if (t1 > t2) throw DomainError("martingale decomposition needs t1 <= t2");
  InequalityCheck chk;
  chk.name = options.experimental_entropy ? "martingale_entropy" : "martingale_variance";
  chk.extras["t1"] = t1;
  chk.extras["t2"] = t2;
  chk.extras["c"] = c;
  chk.extras["inner_paths"] = options.inner_paths;
  outer.index_of(t1);
  outer.index_of(t2);
  if (t1 == t2) {
    chk.degenerate = true;
    return chk;
  }
  const double nested_work = static_cast<double>(outer.n_paths()) * options.inner_paths *
                             (2.0 * outer.config().T - t1 - t2) / outer.config().substep();
  if (nested_work > options.max_work) {
    throw BudgetExceeded("nested simulation work " + std::to_string(nested_work) + " exceeds budget");
  }
  const std::vector<double> a = conditional_terms(F, outer, t2, 2, options);
  const std::vector<double> b = conditional_terms(F, outer, t1, 1, options);
  std::vector<double> lhs(a.size());
  for (std::size_t p = 0; p < a.size(); ++p) lhs[p] = a[p] - b[p];

  // omega(s) = 1_[t1,t2](s) alpha(s) + int_{t1}^{min(t2,s)} alpha(r) kernel(r, s) dr.
  const TimeCurve kt = linear_combination(0.5, pin.k2, -0.5, pin.k1);
  const TimeCurve& k1 = pin.k1;
  const double T = outer.config().T;
  auto decay = [&](double r, double s, double sign) { return std::exp(-(0.5 * k1.integral(r, s) + sign * c * (s - r))); };
  auto alpha = [&](double r) {
    return 1.0 + 0.5 * simpson([&](double s) { return kt(s) * decay(r, s, -1.0); }, r, T, 64);
  };
  auto beta = [&](double s) {
    const double hi = std::min(t2, s);
    return simpson([&](double r) { return alpha(r) * 0.5 * kt(s) * decay(r, s, 1.0); }, t1, hi, 32);
  };
  std::vector<double> rhs = weighted_modified_energies(F, outer, pin, alpha, t1, t2);
  for (const auto& piece : {std::make_pair(t1, t2), std::make_pair(t2, T)}) {
    const std::vector<double> extra = weighted_modified_energies(F, outer, pin, beta, piece.first, piece.second);
    for (std::size_t p = 0; p < rhs.size(); ++p) rhs[p] += extra[p];
  }
  const double factor = options.experimental_entropy ? 2.0 : 1.0;
  for (double& r : rhs) r *= factor;
  chk.lhs = summarize(lhs);
  chk.rhs = summarize(rhs);
  std::vector<double> diff(lhs.size());
  for (std::size_t p = 0; p < lhs.size(); ++p) diff[p] = lhs[p] - rhs[p];
  chk.abs_tol = 10.0 * outer.config().substep() * std::max(std::abs(chk.lhs.mean), std::abs(chk.rhs.mean));
  finish(chk, diff, std::max(std::abs(chk.lhs.mean), std::abs(chk.rhs.mean)), policy);
  return chk;
}

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<Scenario> make_scenarios() {
  std::vector<Scenario> s;
  s.push_back({"flat_linear", "Euclidean R^2, Z = 0, F = <v, x_T>", ManifoldModel::euclidean(2), DriftField::zero(),
               vec({0.0, 0.0}),
               [](double T) { return CylindricalFunction::single(T, BaseFunction::linear(vec({1.0, 0.5}))); }});
  s.push_back({"flat_exp", "Euclidean R^2, Z = 0, F = exp(<v, x_T>/2)", ManifoldModel::euclidean(2),
               DriftField::zero(), vec({0.0, 0.0}),
               [](double T) {
                 return CylindricalFunction::single(T, BaseFunction::exp_linear(vec({1.0, 0.5}), 0.5));
               }});
  s.push_back({"sphere_coordinate", "Sphere(2, 1), F = x^1(T)", ManifoldModel::sphere(2), DriftField::zero(),
               vec({0.6, 0.0, 0.8}),
               [](double T) { return CylindricalFunction::single(T, BaseFunction::linear(vec({1.0, 0.0, 0.0}))); }});
  s.push_back({"sphere_two_time", "Sphere(2, 1), F = tanh(2 x^1(T/2)) + exp(x^3(T)/2)", ManifoldModel::sphere(2),
               DriftField::zero(), vec({0.6, 0.0, 0.8}),
               [](double T) {
                 return CylindricalFunction::sum({0.5 * T, T}, {BaseFunction::tanh_linear(vec({2.0, 0.0, 0.0})),
                                                                BaseFunction::exp_linear(vec({0.0, 0.0, 1.0}), 0.5)});
               }});
  s.push_back({"sphere_height", "Sphere(2, 1) with Z = grad(x^3)/2, F = x^1(T) x^2(T/2) + 1",
               ManifoldModel::sphere(2), DriftField::height_gradient(vec({0.0, 0.0, 1.0}), 0.5),
               vec({0.6, 0.0, 0.8}),
               [](double T) {
                 return CylindricalFunction::sum(
                     {0.5 * T, T}, {BaseFunction::linear(vec({0.0, 1.0, 0.0})),
                                    BaseFunction::custom([](const Vec& x) { return 1.0 + x[0]; },
                                                         [](const Vec& x) -> Vec {
                                                           Vec g = Vec::Zero(x.size());
                                                           g[0] = 1.0;
                                                           return g;
                                                         },
                                                         "one_plus_x1")});
               }});
  s.push_back({"hyperbolic_bump", "Hyperbolic(2, -1), F = Gaussian bump at x_T", ManifoldModel::hyperbolic(2),
               DriftField::zero(), vec({0.0, 0.0, 1.0}),
               [](double T) {
                 return CylindricalFunction::single(T, BaseFunction::gaussian_bump(vec({0.5, 0.0, std::sqrt(1.25)}), 1.0));
               }});
  s.push_back({"hyperbolic_two_time", "Hyperbolic(2, -1), F = bump(x_{T/2}) bump(x_T)", ManifoldModel::hyperbolic(2),
               DriftField::zero(), vec({0.0, 0.0, 1.0}),
               [](double T) {
                 return CylindricalFunction::product(
                     {0.5 * T, T}, {BaseFunction::gaussian_bump(vec({0.0, 0.0, 1.0}), 1.5),
                                    BaseFunction::gaussian_bump(vec({0.5, 0.0, std::sqrt(1.25)}), 1.0)});
               }});
  s.push_back({"ou_linear", "Euclidean R^2 with Z = -x, F = <v, x_T>", ManifoldModel::euclidean(2),
               DriftField::ornstein_uhlenbeck(2), vec({1.0, -0.5}),
               [](double T) { return CylindricalFunction::single(T, BaseFunction::linear(vec({1.0, 0.5}))); }});
  s.push_back({"ou_two_time", "Euclidean R^2 with Z = -x, F = tanh(x^1_{T/2}) exp(x^2_T / 2)",
               ManifoldModel::euclidean(2), DriftField::ornstein_uhlenbeck(2), vec({1.0, -0.5}),
               [](double T) {
                 return CylindricalFunction::product({0.5 * T, T}, {BaseFunction::tanh_linear(vec({1.0, 0.0})),
                                                                    BaseFunction::exp_linear(vec({0.0, 1.0}), 0.5)});
               }});
  s.push_back({"ricci_flow_sphere", "Sphere(2) under d/dt g = Ric, phi^2 = 1 + t, F = x^1(T)",
               ManifoldModel::ricci_flow_sphere(2, 4.0), DriftField::zero(), vec({0.6, 0.0, 0.8}),
               [](double T) { return CylindricalFunction::single(T, BaseFunction::linear(vec({1.0, 0.0, 0.0}))); }});
  return s;
}

InequalityCheck chain_check(const std::string& name, const ChainReport& r) {
  InequalityCheck c;
  c.name = name;
  c.lhs.mean = r.max_excess;
  c.difference = r.max_excess;
  c.verdict = r.holds ? Verdict::Pass : Verdict::Fail;
  c.extras["slack"] = r.slack;
  c.extras["worst_path"] = r.worst_path;
  c.extras["worst_time"] = r.worst_time;
  return c;
}

}  // namespace

const std::vector<Scenario>& builtin_scenarios() {
  static const std::vector<Scenario> all = make_scenarios();
  return all;
}

const Scenario& find_scenario(const std::string& name) {
  for (const auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  throw DomainError("unknown scenario '" + name + "'");
}

ScenarioResult run_scenario(const Scenario& sc, const ScenarioOptions& o) {
  if (!(o.T > 0.0)) throw DomainError("scenario horizon must be positive");
  if (o.n_paths < 2 || o.batch_paths < 1) throw DomainError("scenario needs at least two paths and a positive batch");
  ScenarioResult res;
  res.scenario = sc.name;
  res.T = o.T;
  const CylindricalFunction F = sc.functional(o.T);
  const PinchingCertificate cert = o.pinching ? *o.pinching : pinching(sc.model, sc.drift, o.T, o.seed, 64);
  res.k1 = cert.k1(0.0);
  res.k2 = cert.k2(0.0);
  if (sc.model.is_evolving() || !cert.k1.is_constant() || !cert.k2.is_constant()) {
    res.bound = tilde_h(o.T, cert.k1, cert.k2, o.bound_policy);
  } else {
    try {
      res.bound = h_bound(o.T, ConstantPinching(res.k1, res.k2), o.bound_policy);
    } catch (const OptimizationFailure& e) {
      res.bound = e.fallback();
    }
  }

  SimConfig cfg;
  cfg.T = o.T;
  cfg.steps = std::max(1, static_cast<int>(std::ceil(o.T / o.max_step - 1e-9)));
  cfg.seed = o.seed;
  cfg.scheme = o.scheme;
  cfg.record_stride = o.chains ? 1 : 0;
  cfg.max_work = o.max_work;
  const double work = static_cast<double>(o.n_paths) * cfg.steps;
  if (work > o.max_work) throw BudgetExceeded("scenario work " + std::to_string(work) + " exceeds budget");

  std::vector<double> values, energies;
  values.reserve(static_cast<std::size_t>(o.n_paths));
  energies.reserve(static_cast<std::size_t>(o.n_paths));
  ChainReport damped, modified;
  damped.max_excess = modified.max_excess = -std::numeric_limits<double>::infinity();
  auto merge = [](ChainReport& acc, const ChainReport& r, int offset) {
    if (r.max_excess > acc.max_excess) {
      acc.max_excess = r.max_excess;
      acc.worst_path = r.worst_path + offset;
      acc.worst_time = r.worst_time;
    }
    acc.slack = r.slack;
    acc.holds = acc.holds && r.holds;
  };
  for (int start = 0; start < o.n_paths; start += o.batch_paths) {
    cfg.n_paths = std::min(o.batch_paths, o.n_paths - start);
    cfg.path_offset = static_cast<std::uint64_t>(start);
    const auto ens = simulate(sc.model, sc.drift, sc.x0, cfg, F.times());
    const auto v = path_values(F, ens);
    const auto e = path_energies(F, ens, GradientKind::Intrinsic);
    values.insert(values.end(), v.begin(), v.end());
    energies.insert(energies.end(), e.begin(), e.end());
    if (o.chains) {
      merge(damped, check_damped_chain(F, ens, cert), start);
      merge(modified, check_modified_chain(F, ens, cert), start);
    }
  }
  res.rayleigh = rayleigh_quotient(values, energies);
  res.checks.push_back(check_poincare(values, energies, res.bound.h, o.verdict));
  res.checks.push_back(check_log_sobolev(values, energies, res.bound.h, o.verdict));
  if (o.chains) {
    res.checks.push_back(chain_check("damped_chain", damped));
    res.checks.push_back(chain_check("modified_chain", modified));
  }
  return res;
}

}  // namespace pathgap
