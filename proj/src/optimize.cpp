#include "pathgap/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pathgap/bounds.hpp"
#include "pathgap/error.hpp"

namespace pathgap {

namespace {

constexpr double kInvPhi = 0.6180339887498948482;

struct Best {
  double x = 0.0;
  double value = 0.0;
};

// Golden-section search for a maximum of f on [a, b]; every evaluation is
// offered to `best` (larger value wins, ties keep the earlier point).
void golden_max(const std::function<double(double)>& f, double a, double b, int iters, Best& best) {
  auto offer = [&](double x, double v) {
    if (v > best.value || (v == best.value && x < best.x)) best = {x, v};
  };
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  offer(c, fc);
  offer(d, fd);
  for (int i = 0; i < iters; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
      offer(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
      offer(d, fd);
    }
  }
}

}  // namespace

void SearchPolicy::validate() const {
  if (!(tol > 0.0 && tol <= 1e-2)) throw DomainError("search tolerance must lie in (0, 1e-2]");
  if (t_grid < 16) throw DomainError("t_grid must be at least 16");
  if (refinement_iters < 1) throw DomainError("refinement_iters must be positive");
  if (c_knots != 0 && (c_knots < 2 || c_knots > 8)) throw DomainError("c_knots must be 0 or in [2, 8]");
  const bool empty = c_range.lo == 0.0 && c_range.hi == 0.0;
  if (!empty && !(std::isfinite(c_range.lo) && std::isfinite(c_range.hi) && c_range.lo < c_range.hi)) {
    throw RangeError("c_range must be finite and nonempty");
  }
}

Interval SearchPolicy::resolved_c_range(double k_sup) const {
  if (c_range.lo == 0.0 && c_range.hi == 0.0) {
    const double r = 5.0 * (1.0 + std::abs(k_sup));
    return {-r, r};
  }
  return c_range;
}

SupResult sup_over_t(const std::function<double(double)>& f, double T, int grid, int iters) {
  if (!(T > 0.0)) throw DomainError("horizon T must be positive");
  if (grid < 16) throw DomainError("sup_over_t needs grid >= 16");
  const double h = T / grid;
  auto node = [&](int i) { return i == grid ? T : h * i; };

  Best best{0.0, f(0.0)};
  int best_i = 0;
  for (int i = 1; i <= grid; ++i) {
    const double v = f(node(i));
    if (v > best.value) {
      best = {node(i), v};
      best_i = i;
    }
  }
  if (best_i > 0) golden_max(f, node(best_i - 1), node(best_i), iters, best);
  if (best_i < grid) golden_max(f, node(best_i), node(best_i + 1), iters, best);
  const double lo = std::max(0.0, best.x - h / 8.0);
  const double hi = std::min(T, best.x + h / 8.0);
  if (hi > lo) golden_max(f, lo, hi, iters, best);
  return {best.x, best.value};
}

InfResult inf_over_c(const std::function<double(double)>& g, Interval c_range, double tol) {
  if (!c_range.contains(0.0)) throw RangeError("c_range must contain 0");
  if (!(c_range.width() > 0.0) || !std::isfinite(c_range.width())) {
    throw RangeError("c_range must be finite and nonempty");
  }
  constexpr int kScan = 64;
  InfResult best{0.0, g(0.0)};
  auto offer = [&](double c, double v) {
    if (v < best.value || (v == best.value && c < best.c)) best = {c, v};
  };
  const double step = c_range.width() / (kScan - 1);
  int best_i = -1;
  double scan_best = best.value;
  for (int i = 0; i < kScan; ++i) {
    const double c = i == kScan - 1 ? c_range.hi : c_range.lo + step * i;
    const double v = g(c);
    offer(c, v);
    if (v < scan_best) {
      scan_best = v;
      best_i = i;
    }
  }
  if (best_i < 0) return best;

  double a = std::max(c_range.lo, c_range.lo + step * (best_i - 1));
  double b = std::min(c_range.hi, c_range.lo + step * (best_i + 1));
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double gc = g(c);
  double gd = g(d);
  offer(c, gc);
  offer(d, gd);
  for (int it = 0; it < 200 && (b - a) > tol * (1.0 + std::abs(best.c)); ++it) {
    if (gc <= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - kInvPhi * (b - a);
      gc = g(c);
      offer(c, gc);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + kInvPhi * (b - a);
      gd = g(d);
      offer(d, gd);
    }
  }
  return best;
}

namespace {

// Rates of the two exponential kernels: rho = (K1 - 2c)/2 in alpha and
// sigma = (K1 + 2c)/2 in the memory integral. Their integrals are exact.
struct Kernels {
  const TimeCurve& K1;
  const TimeCurve& K2;
  const TimeCurve& c;

  double rho(double a, double b) const { return 0.5 * K1.integral(a, b) - c.integral(a, b); }
  double sigma(double a, double b) const { return 0.5 * K1.integral(a, b) + c.integral(a, b); }

  // \int_a^b K2(u) e^{-\int_a^u rho} du by Simpson on the single panel.
  double forward_panel(double a, double b) const {
    const double m = 0.5 * (a + b);
    return (b - a) / 6.0 *
           (K2(a) + 4.0 * K2(m) * std::exp(-rho(a, m)) + K2(b) * std::exp(-rho(a, b)));
  }
};

void check_curves(double T, const TimeCurve& K1, const TimeCurve& K2, const TimeCurve& c) {
  if (!(T > 0.0)) throw DomainError("horizon T must be positive");
  if (!K1.covers(T) || !K2.covers(T) || !c.covers(T)) throw DomainError("curves must cover [0, T]");
}

// alpha(s) - 1 at the nodes of a uniform n-panel grid on [lo, hi], given the
// tail \int_hi^T K2 e^{-\int rho}; also returns alpha at panel midpoints.
void alpha_on_grid(const Kernels& k, double lo, double hi, int n, double tail, std::vector<double>& nodes,
                   std::vector<double>& mids) {
  nodes.assign(static_cast<std::size_t>(n) + 1, 0.0);
  mids.assign(static_cast<std::size_t>(n), 0.0);
  const double h = (hi - lo) / n;
  double ip = tail;
  nodes[static_cast<std::size_t>(n)] = 1.0 + 0.5 * ip;
  for (int j = n - 1; j >= 0; --j) {
    const double a = lo + h * j;
    const double b = j == n - 1 ? hi : lo + h * (j + 1);
    const double m = 0.5 * (a + b);
    const double ip_mid = k.forward_panel(m, b) + std::exp(-k.rho(m, b)) * ip;
    ip = k.forward_panel(a, b) + std::exp(-k.rho(a, b)) * ip;
    mids[static_cast<std::size_t>(j)] = 1.0 + 0.5 * ip_mid;
    nodes[static_cast<std::size_t>(j)] = 1.0 + 0.5 * ip;
  }
}

// \int_lo^hi alpha(s) e^{-\int_s^hi sigma} ds accumulated forward, sampled at each node.
void memory_on_grid(const Kernels& k, double lo, double hi, int n, const std::vector<double>& nodes,
                    const std::vector<double>& mids, std::vector<double>& memory) {
  memory.assign(static_cast<std::size_t>(n) + 1, 0.0);
  const double h = (hi - lo) / n;
  double in = 0.0;
  for (int j = 0; j < n; ++j) {
    const double a = lo + h * j;
    const double b = j == n - 1 ? hi : lo + h * (j + 1);
    const double m = 0.5 * (a + b);
    const double panel = (b - a) / 6.0 *
                         (nodes[static_cast<std::size_t>(j)] * std::exp(-k.sigma(a, b)) +
                          4.0 * mids[static_cast<std::size_t>(j)] * std::exp(-k.sigma(m, b)) +
                          nodes[static_cast<std::size_t>(j) + 1]);
    in = std::exp(-k.sigma(a, b)) * in + panel;
    memory[static_cast<std::size_t>(j) + 1] = in;
  }
}

double tilde_lambda_fixed(double t, double T, const Kernels& k, int n) {
  // Tail \int_t^T K2 e^{-\int_t^s rho} on its own grid so t is always a node.
  double tail = 0.0;
  if (T > t) {
    const double h = (T - t) / n;
    for (int j = n - 1; j >= 0; --j) {
      const double a = t + h * j;
      const double b = j == n - 1 ? T : t + h * (j + 1);
      tail = k.forward_panel(a, b) + std::exp(-k.rho(a, b)) * tail;
    }
  }
  if (t == 0.0) return 1.0 + 0.5 * tail;
  std::vector<double> nodes, mids, memory;
  alpha_on_grid(k, 0.0, t, n, tail, nodes, mids);
  memory_on_grid(k, 0.0, t, n, nodes, mids, memory);
  return nodes.back() + 0.5 * k.K2(t) * memory.back();
}

}  // namespace

double tilde_lambda_c(double t, double T, const TimeCurve& K1, const TimeCurve& K2, const TimeCurve& c,
                      double tol) {
  check_curves(T, K1, K2, c);
  if (!(t >= 0.0 && t <= T)) throw DomainError("time t must lie in [0, T]");
  if (K2.identically_zero()) return 1.0;
  const Kernels k{K1, K2, c};
  constexpr int kStart = 1024;
  constexpr int kMax = 1 << 20;
  double prev = tilde_lambda_fixed(t, T, k, kStart);
  for (int n = 2 * kStart; n <= kMax; n *= 2) {
    const double next = tilde_lambda_fixed(t, T, k, n);
    if (std::abs(next - prev) < tol) return next;
    prev = next;
  }
  throw QuadratureError("tilde_lambda_c did not reach tolerance " + std::to_string(tol));
}

std::vector<double> tilde_lambda_sweep(double T, const TimeCurve& K1, const TimeCurve& K2, const TimeCurve& c,
                                       int n) {
  check_curves(T, K1, K2, c);
  if (n < 1) throw DomainError("sweep needs n >= 1");
  if (K2.identically_zero()) return std::vector<double>(static_cast<std::size_t>(n) + 1, 1.0);
  const Kernels k{K1, K2, c};
  std::vector<double> nodes, mids, memory;
  alpha_on_grid(k, 0.0, T, n, 0.0, nodes, mids);
  memory_on_grid(k, 0.0, T, n, nodes, mids, memory);
  std::vector<double> out(nodes.size());
  const double h = T / n;
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double t = j == out.size() - 1 ? T : h * static_cast<double>(j);
    out[j] = nodes[j] + 0.5 * K2(t) * memory[j];
  }
  return out;
}

namespace {

double sup_tilde(double T, const TimeCurve& K1, const TimeCurve& K2, const TimeCurve& c,
                 const SearchPolicy& policy) {
  const int n = std::max(1024, 4 * policy.t_grid);
  const std::vector<double> sweep = tilde_lambda_sweep(T, K1, K2, c, n);
  const auto it = std::max_element(sweep.begin(), sweep.end());
  const int i = static_cast<int>(it - sweep.begin());
  const double h = T / n;
  Best best{i == n ? T : h * i, *it};
  auto f = [&](double t) { return tilde_lambda_c(t, T, K1, K2, c, policy.tol); };
  // Replace the grid value by the converged quadrature before refining.
  best.value = f(best.x);
  const double lo = std::max(0.0, best.x - h);
  const double hi = std::min(T, best.x + h);
  golden_max(f, lo, hi, std::min(policy.refinement_iters, 20), best);
  return best.value;
}

}  // namespace

double tilde_s(double T, const TimeCurve& K1, const TimeCurve& K2, const SearchPolicy& policy,
               double* c_star) {
  policy.validate();
  check_curves(T, K1, K2, TimeCurve::constant(0.0));
  if (c_star != nullptr) *c_star = 0.0;
  if (K2.identically_zero()) return 1.0;
  if (policy.mode == SearchPolicy::Mode::ClosedFormOnly) {
    return sup_tilde(T, K1, K2, TimeCurve::constant(0.0), policy);
  }
  const Interval range = policy.resolved_c_range(std::max(K1.sup_abs(), K2.sup_abs()));
  auto g = [&](double c) { return sup_tilde(T, K1, K2, TimeCurve::constant(c), policy); };
  const InfResult constant = inf_over_c(g, range, std::max(policy.tol, 1e-6));
  double best = constant.value;
  double centre = constant.c;
  if (policy.c_knots >= 2) {
    const int m = policy.c_knots;
    std::vector<double> knots(static_cast<std::size_t>(m));
    std::vector<double> values(static_cast<std::size_t>(m), constant.c);
    for (int i = 0; i < m; ++i) knots[static_cast<std::size_t>(i)] = T * i / (m - 1);
    auto at = [&](std::size_t idx, double v) {
      std::vector<double> trial = values;
      trial[idx] = v;
      return sup_tilde(T, K1, K2, TimeCurve::piecewise_linear(knots, trial), policy);
    };
    for (int sweep = 0; sweep < 3; ++sweep) {
      for (std::size_t idx = 0; idx < values.size(); ++idx) {
        // Minimise over one knot value; golden_max on the negated objective.
        Best local{values[idx], -best};
        golden_max([&](double v) { return -at(idx, v); }, range.lo, range.hi, 30, local);
        if (-local.value < best) {
          best = -local.value;
          values[idx] = local.x;
        }
      }
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    centre = sum / m;
  }
  if (c_star != nullptr) *c_star = centre;
  return best;
}

BoundReport tilde_h(double T, const TimeCurve& k1, const TimeCurve& k2, const SearchPolicy& policy) {
  if (!(T > 0.0)) throw DomainError("horizon T must be positive");
  if (!k1.covers(T) || !k2.covers(T)) throw DomainError("pinching curves must cover [0, T]");
  if (k1.is_constant() && k2.is_constant()) {
    return h_bound(T, ConstantPinching(k1.constant_value(), k2.constant_value()), policy);
  }
  const TimeCurve gap = linear_combination(1.0, k2, -1.0, k1);
  for (double v : gap.values()) {
    if (v < -1e-12) throw DomainError("pinching requires k1 <= k2 on [0, T]");
  }
  const TimeCurve half_gap = gap.scaled(0.5);
  const TimeCurve mean = linear_combination(0.5, k1, 0.5, k2);
  BoundReport report;
  report.T = T;
  double c_fw = 0.0;
  double c_p = 0.0;
  report.fang_wu = tilde_s(T, k1, abs_max(k1, k2), policy, &c_fw);
  report.product = tilde_s(T, k1, half_gap, policy, &c_p) * tilde_s(T, mean, abs(mean), policy);
  report.h = std::min(report.fang_wu, report.product);
  report.branch = report.fang_wu <= report.product ? BoundBranch::FangWu : BoundBranch::Product;
  report.c_star = report.branch == BoundBranch::FangWu ? c_fw : c_p;
  return report;
}

}  // namespace pathgap
