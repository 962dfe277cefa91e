#include "pathgap/functional.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pathgap/expfun.hpp"

namespace pathgap {

std::string_view to_string(GradientKind k) {
  switch (k) {
    case GradientKind::Intrinsic:
      return "intrinsic";
    case GradientKind::Damped:
      return "damped";
    case GradientKind::Modified:
      return "modified";
  }
  return "?";
}

BaseFunction BaseFunction::linear(Vec v) {
  return {[v](const Vec& x) { return v.dot(x); }, [v](const Vec&) { return v; }, "linear", v.isZero(0.0)};
}

BaseFunction BaseFunction::exp_linear(Vec v, double scale) {
  return {[v, scale](const Vec& x) { return std::exp(scale * v.dot(x)); },
          [v, scale](const Vec& x) -> Vec { return (scale * std::exp(scale * v.dot(x))) * v; }, "exp_linear",
          scale == 0.0 || v.isZero(0.0)};
}

BaseFunction BaseFunction::gaussian_bump(Vec center, double width) {
  if (!(width > 0.0)) throw DomainError("gaussian_bump needs a positive width");
  const double s = 1.0 / (2.0 * width * width);
  return {[center, s](const Vec& x) { return std::exp(-s * (x - center).squaredNorm()); },
          [center, s](const Vec& x) -> Vec {
            return (-2.0 * s * std::exp(-s * (x - center).squaredNorm())) * (x - center);
          },
          "gaussian_bump", false};
}

BaseFunction BaseFunction::tanh_linear(Vec v) {
  return {[v](const Vec& x) { return std::tanh(v.dot(x)); },
          [v](const Vec& x) -> Vec {
            const double th = std::tanh(v.dot(x));
            return (1.0 - th * th) * v;
          },
          "tanh_linear", v.isZero(0.0)};
}

BaseFunction BaseFunction::constant(double c) {
  return {[c](const Vec&) { return c; }, [](const Vec& x) -> Vec { return Vec::Zero(x.size()); }, "constant", true};
}

BaseFunction BaseFunction::custom(ValueFn value, GradientFn ambient_gradient, std::string name) {
  return {std::move(value), std::move(ambient_gradient), std::move(name), false};
}

CylindricalFunction::CylindricalFunction(Form form, std::vector<double> times, std::vector<BaseFunction> parts)
    : form_(form), times_(std::move(times)), parts_(std::move(parts)) {
  if (times_.empty()) throw DomainError("a cylindrical function needs at least one time");
  if (times_.size() != parts_.size()) throw DimensionError("one base function per time is required");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || (i > 0 && !(times_[i] > times_[i - 1]))) {
      throw DomainError("cylindrical times must be finite and strictly increasing");
    }
  }
}

CylindricalFunction CylindricalFunction::single(double t, BaseFunction f) {
  return {Form::Sum, {t}, {std::move(f)}};
}

CylindricalFunction CylindricalFunction::sum(std::vector<double> times, std::vector<BaseFunction> parts) {
  return {Form::Sum, std::move(times), std::move(parts)};
}

CylindricalFunction CylindricalFunction::product(std::vector<double> times, std::vector<BaseFunction> parts) {
  return {Form::Product, std::move(times), std::move(parts)};
}

CylindricalFunction CylindricalFunction::constant(double c, double t) { return single(t, BaseFunction::constant(c)); }

bool CylindricalFunction::is_constant() const noexcept {
  return std::all_of(parts_.begin(), parts_.end(), [](const BaseFunction& f) { return f.is_constant(); });
}

std::string CylindricalFunction::describe() const {
  std::ostringstream os;
  os << (form_ == Form::Sum ? "sum" : "product") << "(";
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (i) os << ", ";
    os << parts_[i].name() << "@" << times_[i];
  }
  os << ")";
  return os.str();
}

double CylindricalFunction::value(const std::vector<Vec>& xs) const {
  if (xs.size() != arity()) throw DimensionError("cylindrical function arity mismatch");
  double acc = form_ == Form::Sum ? 0.0 : 1.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = parts_[i].value(xs[i]);
    acc = form_ == Form::Sum ? acc + v : acc * v;
  }
  return acc;
}

std::vector<Vec> CylindricalFunction::gradients(const ManifoldModel& model, const std::vector<Vec>& xs) const {
  if (xs.size() != arity()) throw DimensionError("cylindrical function arity mismatch");
  std::vector<Vec> out;
  out.reserve(xs.size());
  std::vector<double> vals;
  if (form_ == Form::Product) {
    for (std::size_t i = 0; i < xs.size(); ++i) vals.push_back(parts_[i].value(xs[i]));
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Vec g = parts_[i].gradient(model, times_[i], xs[i]);
    if (form_ == Form::Product) {
      double others = 1.0;
      for (std::size_t k = 0; k < vals.size(); ++k) {
        if (k != i) others *= vals[k];
      }
      g *= others;
    }
    out.push_back(std::move(g));
  }
  return out;
}

EnergyEstimate summarize(const std::vector<double>& samples) {
  EnergyEstimate e;
  e.n_paths = static_cast<int>(samples.size());
  if (samples.empty()) return e;
  const double n = static_cast<double>(samples.size());
  e.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - e.mean) * (s - e.mean);
    e.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

EnergyEstimate variance_of(const std::vector<double>& values) {
  const double mu = summarize(values).mean;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - mu) * (values[i] - mu);
  return summarize(sq);
}

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

EnergyEstimate entropy_of(const std::vector<double>& values, bool zero_log_zero) {
  const std::size_t n = values.size();
  EnergyEstimate e;
  e.n_paths = static_cast<int>(n);
  if (n == 0) return e;
  std::vector<double> g(n), glog(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = values[i] * values[i];
    if (g[i] == 0.0 && !zero_log_zero) throw DomainError("entropy needs F^2 > 0 (enable the 0 log 0 convention)");
    glog[i] = xlogx(g[i]);
  }
  const double nn = static_cast<double>(n);
  const double m = std::accumulate(g.begin(), g.end(), 0.0) / nn;
  const double a = std::accumulate(glog.begin(), glog.end(), 0.0) / nn;
  e.mean = a - xlogx(m);
  if (m == 0.0) return e;
  std::vector<double> infl(n);
  const double slope = std::log(m) + 1.0;
  for (std::size_t i = 0; i < n; ++i) infl[i] = glog[i] - slope * g[i];
  e.std_error = summarize(infl).std_error;
  if (n > 1) {
    double jk = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mi = (nn * m - g[i]) / (nn - 1.0);
      const double ai = (nn * a - glog[i]) / (nn - 1.0);
      jk += ai - xlogx(mi);
    }
    e.bias = (nn - 1.0) * (jk / nn - e.mean);
  }
  return e;
}

namespace {

// Per-ensemble bookkeeping shared by all paths.
struct Layout {
  std::vector<std::size_t> record_of;  // partition index of each cylindrical time
  std::vector<double> edges;           // t0 = tau_0 < tau_1 < ... < tau_n
  // Modified gradient: weights[m][i] = e^{-(K(tau_i) - K(tau_m))/4}, span[m] = int e^{(K - K(tau_m))/2}.
  std::vector<std::vector<double>> weights;
  std::vector<double> span;
  TimeCurve ksum;
  bool has_pinching = false;
};

TimeCurve pinching_sum(const PinchingCertificate& p) { return linear_combination(1.0, p.k1, 1.0, p.k2); }

template <typename F>
double simpson(F&& f, double a, double b, int panels) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

Layout make_layout(const CylindricalFunction& F, const PathEnsemble& ens, const PinchingCertificate* pinching) {
  Layout L;
  const double t0 = ens.config().t0;
  L.edges.push_back(t0);
  for (double t : F.times()) {
    if (!(t > t0)) throw DomainError("cylindrical times must exceed the ensemble start time");
    L.record_of.push_back(ens.index_of(t));
    L.edges.push_back(t);
  }
  if (pinching) {
    L.has_pinching = true;
    L.ksum = pinching_sum(*pinching);
    const std::size_t n = F.arity();
    L.weights.assign(n, std::vector<double>(n, 0.0));
    L.span.assign(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
      const double a = L.edges[m], b = L.edges[m + 1];
      for (std::size_t i = m; i < n; ++i) L.weights[m][i] = std::exp(-0.25 * L.ksum.integral(a, F.times()[i]));
      if (L.ksum.is_constant()) {
        L.span[m] = (b - a) * expfun::phi1(0.5 * L.ksum.constant_value() * (b - a));
      } else {
        const TimeCurve& k = L.ksum;
        L.span[m] = simpson([&](double t) { return std::exp(0.5 * k.integral(a, t)); }, a, b, 256);
      }
    }
  }
  return L;
}

// Frame coordinates of nabla_i f at x(t_i).
std::vector<Vec> frame_gradients(const CylindricalFunction& F, const PathEnsemble& ens, const Layout& L, int path) {
  std::vector<Vec> xs;
  xs.reserve(F.arity());
  for (std::size_t j : L.record_of) xs.push_back(ens.point(path, j));
  std::vector<Vec> g = F.gradients(ens.model(), xs);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = ens.to_frame(path, L.record_of[i], g[i]);
  return g;
}

// Frame coordinates of D_t F (intrinsic or modified) at time t.
Vec coordinates_at(const CylindricalFunction& F, const Layout& L, const std::vector<Vec>& g, double t,
                   GradientKind kind, int d) {
  Vec out = Vec::Zero(d);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(t < F.times()[i])) continue;
    if (kind == GradientKind::Modified) {
      out += std::exp(-0.25 * L.ksum.integral(t, F.times()[i])) * g[i];
    } else {
      out += g[i];
    }
  }
  return out;
}

// Damped gradient at every record by backward recursion; right values at records.
std::vector<Vec> damped_on_records(const PathEnsemble& ens, const Layout& L, const std::vector<Vec>& g, int path,
                                   std::vector<Vec>* left_limits = nullptr) {
  const std::size_t J = ens.n_records();
  const int d = ens.dim();
  std::vector<Vec> jump(J, Vec::Zero(d));
  for (std::size_t i = 0; i < g.size(); ++i) jump[L.record_of[i]] += g[i];
  std::vector<Vec> W(J, Vec::Zero(d));
  if (left_limits) left_limits->assign(J, Vec::Zero(d));
  for (std::size_t j = J - 1; j-- > 0;) {
    const Vec left = W[j + 1] + jump[j + 1];
    if (left_limits) (*left_limits)[j + 1] = left;
    W[j] = ens.phi(path, j + 1) * left;
  }
  return W;
}

}  // namespace

std::vector<double> path_values(const CylindricalFunction& F, const PathEnsemble& ensemble) {
  std::vector<std::size_t> idx;
  for (double t : F.times()) idx.push_back(ensemble.index_of(t));
  std::vector<double> out(static_cast<std::size_t>(ensemble.n_paths()));
  std::vector<Vec> xs(idx.size());
  for (int p = 0; p < ensemble.n_paths(); ++p) {
    for (std::size_t i = 0; i < idx.size(); ++i) xs[i] = ensemble.point(p, idx[i]);
    out[static_cast<std::size_t>(p)] = F.value(xs);
  }
  return out;
}

Vec gradient_at(const CylindricalFunction& F, const PathEnsemble& ensemble, int path, double t, GradientKind kind,
                const PinchingCertificate* pinching) {
  if (kind == GradientKind::Modified && !pinching) throw DomainError("the modified gradient needs pinching curves");
  const std::size_t j = ensemble.index_of(t);
  const Layout L = make_layout(F, ensemble, kind == GradientKind::Modified ? pinching : nullptr);
  const std::vector<Vec> g = frame_gradients(F, ensemble, L, path);
  Vec coords;
  if (kind == GradientKind::Damped) {
    coords = damped_on_records(ensemble, L, g, path)[j];
  } else {
    coords = coordinates_at(F, L, g, ensemble.partition()[j], kind, ensemble.dim());
  }
  return ensemble.frame(path, j) * coords;
}

std::vector<double> path_energies(const CylindricalFunction& F, const PathEnsemble& ensemble, GradientKind kind,
                                  const PinchingCertificate* pinching) {
  if (kind == GradientKind::Modified && !pinching) throw DomainError("the modified gradient needs pinching curves");
  const Layout L = make_layout(F, ensemble, kind == GradientKind::Modified ? pinching : nullptr);
  const std::size_t n = F.arity();
  const int d = ensemble.dim();
  std::vector<double> out(static_cast<std::size_t>(ensemble.n_paths()), 0.0);
  if (F.is_constant()) return out;
  const auto& part = ensemble.partition();
  for (int p = 0; p < ensemble.n_paths(); ++p) {
    const std::vector<Vec> g = frame_gradients(F, ensemble, L, p);
    double e = 0.0;
    switch (kind) {
      case GradientKind::Intrinsic: {
        Vec S = Vec::Zero(d);
        for (std::size_t m = n; m-- > 0;) {
          S += g[m];
          e += S.squaredNorm() * (L.edges[m + 1] - L.edges[m]);
        }
        break;
      }
      case GradientKind::Modified: {
        for (std::size_t m = 0; m < n; ++m) {
          Vec W = Vec::Zero(d);
          for (std::size_t i = m; i < n; ++i) W += L.weights[m][i] * g[i];
          e += W.squaredNorm() * L.span[m];
        }
        break;
      }
      case GradientKind::Damped: {
        std::vector<Vec> left;
        const std::vector<Vec> W = damped_on_records(ensemble, L, g, p, &left);
        for (std::size_t j = 0; j + 1 < part.size(); ++j) {
          e += 0.5 * (W[j].squaredNorm() + left[j + 1].squaredNorm()) * (part[j + 1] - part[j]);
        }
        break;
      }
    }
    out[static_cast<std::size_t>(p)] = e;
  }
  return out;
}

std::vector<double> weighted_modified_energies(const CylindricalFunction& F, const PathEnsemble& ensemble,
                                               const PinchingCertificate& pinching,
                                               const std::function<double(double)>& weight, double a, double b) {
  const Layout L = make_layout(F, ensemble, &pinching);
  const std::size_t n = F.arity();
  const int d = ensemble.dim();
  // span[m] = int over [a, b] within interval m of weight(s) e^{(K(s) - K(tau_m))/2} ds.
  std::vector<double> span(n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    const double lo = std::max(a, L.edges[m]), hi = std::min(b, L.edges[m + 1]);
    if (!(hi > lo)) continue;
    const double base = L.edges[m];
    span[m] = simpson([&](double s) { return weight(s) * std::exp(0.5 * L.ksum.integral(base, s)); }, lo, hi, 64);
  }
  std::vector<double> out(static_cast<std::size_t>(ensemble.n_paths()), 0.0);
  for (int p = 0; p < ensemble.n_paths(); ++p) {
    const std::vector<Vec> g = frame_gradients(F, ensemble, L, p);
    double e = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      if (span[m] == 0.0) continue;
      Vec W = Vec::Zero(d);
      for (std::size_t i = m; i < n; ++i) W += L.weights[m][i] * g[i];
      e += W.squaredNorm() * span[m];
    }
    out[static_cast<std::size_t>(p)] = e;
  }
  return out;
}

EnergyEstimate dirichlet_energy(const CylindricalFunction& F, const PathEnsemble& ensemble, GradientKind kind,
                                const PinchingCertificate* pinching) {
  return summarize(path_energies(F, ensemble, kind, pinching));
}

EnergyEstimate variance(const CylindricalFunction& F, const PathEnsemble& ensemble) {
  return variance_of(path_values(F, ensemble));
}

EnergyEstimate entropy(const CylindricalFunction& F, const PathEnsemble& ensemble, bool zero_log_zero) {
  return entropy_of(path_values(F, ensemble), zero_log_zero);
}

namespace {

// chain[j][m] = int over [max(t_j, tau_m), tau_{m+1}) of kernel(t_j, s) ds.
template <typename Kernel>
std::vector<std::vector<double>> chain_weights(const PathEnsemble& ens, const Layout& L, Kernel&& kernel) {
  const auto& part = ens.partition();
  const std::size_t n = L.edges.size() - 1;
  std::vector<std::vector<double>> w(part.size(), std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < part.size(); ++j) {
    const double t = part[j];
    for (std::size_t m = 0; m < n; ++m) {
      const double a = std::max(t, L.edges[m]), b = L.edges[m + 1];
      if (b > a) w[j][m] = simpson([&](double s) { return kernel(t, s); }, a, b, 64);
    }
  }
  return w;
}

template <typename Lhs>
ChainReport run_chain(const CylindricalFunction& F, const PathEnsemble& ens, const Layout& L,
                      const std::vector<std::vector<double>>& w, int max_paths, Lhs&& lhs) {
  ChainReport r;
  r.slack = 10.0 * ens.config().substep();
  const int d = ens.dim();
  const std::size_t n = F.arity();
  const int paths = max_paths < 0 ? ens.n_paths() : std::min(max_paths, ens.n_paths());
  const auto& part = ens.partition();
  r.max_excess = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < paths; ++p) {
    const std::vector<Vec> g = frame_gradients(F, ens, L, p);
    // |D_s F| on each interval between cylindrical times.
    std::vector<double> intrinsic(n, 0.0);
    Vec S = Vec::Zero(d);
    for (std::size_t m = n; m-- > 0;) {
      S += g[m];
      intrinsic[m] = S.norm();
    }
    const std::vector<double> left = lhs(p, g);
    for (std::size_t j = 0; j < part.size(); ++j) {
      double rhs = 0.0;
      for (std::size_t m = 0; m < n; ++m) rhs += w[j][m] * intrinsic[m];
      rhs += coordinates_at(F, L, g, part[j], GradientKind::Intrinsic, d).norm();
      const double excess = left[j] - (1.0 + r.slack) * rhs;
      if (excess > r.max_excess) {
        r.max_excess = excess;
        r.worst_path = p;
        r.worst_time = part[j];
      }
    }
  }
  r.holds = r.max_excess <= 1e-12;
  return r;
}

}  // namespace

ChainReport check_damped_chain(const CylindricalFunction& F, const PathEnsemble& ensemble,
                               const PinchingCertificate& pinching, int max_paths) {
  const Layout L = make_layout(F, ensemble, nullptr);
  const double kmax = std::max(pinching.k1.sup_abs(), pinching.k2.sup_abs());
  const TimeCurve& k1 = pinching.k1;
  const auto w = chain_weights(ensemble, L, [&](double t, double s) {
    return 0.5 * kmax * std::exp(-0.5 * k1.integral(t, s));
  });
  return run_chain(F, ensemble, L, w, max_paths, [&](int p, const std::vector<Vec>& g) {
    const std::vector<Vec> W = damped_on_records(ensemble, L, g, p);
    std::vector<double> out(W.size());
    for (std::size_t j = 0; j < W.size(); ++j) out[j] = W[j].norm();
    return out;
  });
}

ChainReport check_modified_chain(const CylindricalFunction& F, const PathEnsemble& ensemble,
                                 const PinchingCertificate& pinching, int max_paths) {
  const Layout L = make_layout(F, ensemble, &pinching);
  const TimeCurve kbar = L.ksum.scaled(0.5);
  const auto w = chain_weights(ensemble, L, [&](double t, double s) {
    return 0.5 * std::abs(kbar(s)) * std::exp(-0.5 * kbar.integral(t, s));
  });
  const int d = ensemble.dim();
  return run_chain(F, ensemble, L, w, max_paths, [&](int, const std::vector<Vec>& g) {
    std::vector<double> out;
    for (double t : ensemble.partition()) out.push_back(coordinates_at(F, L, g, t, GradientKind::Modified, d).norm());
    return out;
  });
}

}  // namespace pathgap
