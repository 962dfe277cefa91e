#include "pathgap/pathsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "pathgap/rng.hpp"

namespace pathgap {

std::string_view to_string(Scheme s) { return s == Scheme::GeodesicEuler ? "geodesic_euler" : "geodesic_heun"; }

void SimConfig::validate() const {
  if (!(T > t0) || !std::isfinite(T) || !std::isfinite(t0)) throw DomainError("simulation needs t0 < T");
  if (steps < 1) throw DomainError("steps must be positive");
  if (n_paths < 1) throw DomainError("n_paths must be positive");
  if (record_stride < 0) throw DomainError("record_stride must be non-negative");
  if (refine_level < 0 || refine_level > 16) throw DomainError("refine_level must lie in [0, 16]");
  if (step() > 0.1 + 1e-15) throw DomainError("step size " + std::to_string(step()) + " exceeds 0.1");
}

PathEnsemble::PathEnsemble(ManifoldModel model, DriftField drift, Vec x0, SimConfig cfg,
                           std::vector<double> partition, std::vector<long> record_substeps)
    : model_(std::move(model)),
      drift_(std::move(drift)),
      x0_(std::move(x0)),
      cfg_(cfg),
      n_(model_.ambient_dim()),
      d_(model_.dim()),
      partition_(std::move(partition)),
      record_substeps_(std::move(record_substeps)),
      data_(static_cast<std::size_t>(cfg.n_paths) * partition_.size() * record_size(), 0.0) {}

bool PathEnsemble::contains(double t) const noexcept {
  const auto it = std::lower_bound(partition_.begin(), partition_.end(), t - 1e-9 * (1.0 + std::abs(t)));
  return it != partition_.end() && std::abs(*it - t) <= 1e-9 * (1.0 + std::abs(t));
}

std::size_t PathEnsemble::index_of(double t) const {
  const auto it = std::lower_bound(partition_.begin(), partition_.end(), t - 1e-9 * (1.0 + std::abs(t)));
  if (it == partition_.end() || std::abs(*it - t) > 1e-9 * (1.0 + std::abs(t))) {
    throw DomainError("time " + std::to_string(t) + " is not in the ensemble partition");
  }
  return static_cast<std::size_t>(it - partition_.begin());
}

Vec PathEnsemble::point(int path, std::size_t j) const {
  return Eigen::Map<const Eigen::VectorXd>(record(path, j), n_);
}

Mat PathEnsemble::frame(int path, std::size_t j) const {
  return Eigen::Map<const Eigen::MatrixXd>(record(path, j) + n_, n_, d_);
}

Mat PathEnsemble::phi(int path, std::size_t j) const {
  return Eigen::Map<const Eigen::MatrixXd>(record(path, j) + n_ + n_ * d_, d_, d_);
}

Mat PathEnsemble::q(int path, std::size_t i, std::size_t k) const {
  if (i > k || k >= partition_.size()) throw DomainError("q needs partition indices i <= k");
  Mat out = Mat::Identity(d_, d_);
  for (std::size_t j = i + 1; j <= k; ++j) out = out * phi(path, j);
  return out;
}

Vec PathEnsemble::to_frame(int path, std::size_t j, const Vec& w) const {
  const Mat u = frame(path, j);
  return u.transpose() * model_.metric_matrix(partition_[j]) * w;
}

Vec PathEnsemble::transport(int path, std::size_t i, std::size_t k, const Vec& w) const {
  return frame(path, k) * to_frame(path, i, w);
}

namespace {

// R^Z in frame coordinates, with a scalar fast path for isotropic models.
struct Curvature {
  bool scalar = true;
  double s = 0.0;
  Mat R;
};

class CurvatureEvaluator {
 public:
  CurvatureEvaluator(const ManifoldModel& m, const DriftField& z) : model_(m), drift_(z) {
    if (z.kind() == DriftField::Kind::Linear) {
      const Mat& A = z.matrix();
      const double a = A(0, 0);
      linear_scalar_ = (A - a * Mat::Identity(A.rows(), A.cols())).cwiseAbs().maxCoeff() == 0.0;
      linear_value_ = -a;
    }
  }

  Curvature operator()(double t, const Vec& x, const Mat& u) const {
    Curvature c;
    switch (drift_.kind()) {
      case DriftField::Kind::Zero:
        c.s = model_.ricci_scalar(t);
        if (model_.is_evolving()) c.s -= model_.phi2().slope(t) / model_.phi2()(t);
        return c;
      case DriftField::Kind::Linear:
        if (linear_scalar_) {
          c.s = linear_value_;
          return c;
        }
        break;
      case DriftField::Kind::HeightGradient: {
        const double r2 = model_.radius() * model_.radius();
        c.s = model_.ricci_scalar(t) + drift_.strength() * drift_.direction().dot(x) / r2;
        return c;
      }
      case DriftField::Kind::Custom:
        break;
    }
    c.scalar = false;
    c.R = ricci_z_frame(model_, drift_, t, x, u);
    return c;
  }

 private:
  const ManifoldModel& model_;
  const DriftField& drift_;
  bool linear_scalar_ = false;
  double linear_value_ = 0.0;
};

struct PathState {
  Vec x;
  Mat u;
  Mat Q;
  double q_scalar = 1.0;
  bool q_is_scalar = true;
};

// Brownian increments of the 2^level substeps of one step, by midpoint bridges.
void bridge_increments(const NormalSource& src, std::uint64_t path, std::uint64_t step, int level, int d, double h,
                       std::vector<double>& out) {
  const long count = 1L << level;
  out.assign(static_cast<std::size_t>(count * d), 0.0);
  double z[kMaxAmbient];
  src.normals(path, step, 0, z, d);
  const double sh = std::sqrt(h);
  for (int a = 0; a < d; ++a) out[static_cast<std::size_t>(a)] = sh * z[a];
  double tau = h;
  for (int l = 1; l <= level; ++l) {
    const long parents = 1L << (l - 1);
    const double sd = 0.5 * std::sqrt(tau);
    // Split back to front so parents are read before being overwritten.
    for (long m = parents - 1; m >= 0; --m) {
      src.normals(path, step, static_cast<std::uint32_t>((l << 16) | m), z, d);
      for (int a = 0; a < d; ++a) {
        const double D = out[static_cast<std::size_t>(m * d + a)];
        out[static_cast<std::size_t>((2 * m) * d + a)] = 0.5 * D + sd * z[a];
        out[static_cast<std::size_t>((2 * m + 1) * d + a)] = 0.5 * D - sd * z[a];
      }
    }
    tau *= 0.5;
  }
}

class Integrator {
 public:
  Integrator(const ManifoldModel& m, const DriftField& z, const SimConfig& cfg)
      : model_(m), drift_(z), cfg_(cfg), curvature_(m, z), d_(m.dim()) {}

  // Advances `s` from time t by h with Brownian increment dW (length d).
  void step(PathState& s, double t, double h, const double* dW, Curvature& R_start) const {
    Vec noise = Vec::Zero(d_);
    for (int a = 0; a < d_; ++a) noise[a] = dW[a];
    Vec v = s.u * noise;
    if (!drift_.is_zero()) {
      const Vec z0 = drift_.value(t, s.x);
      if (cfg_.scheme == Scheme::GeodesicHeun) {
        const Vec v1 = v + 0.5 * h * z0;
        const GeodesicStep pred = model_.geodesic_step(s.x, v1);
        const Vec z1 = drift_.value(t + h, pred.x);
        const Vec back = model_.geodesic_step(pred.x, -pred.transport.apply(v1)).transport.apply(z1);
        v += 0.25 * h * (z0 + model_.project_tangent(s.x, back));
      } else {
        v += 0.5 * h * z0;
      }
    }
    const GeodesicStep g = model_.geodesic_step(s.x, v);
    s.x = g.x;
    s.u = g.transport.apply(s.u);
    if (model_.is_evolving()) s.u *= std::sqrt(model_.phi2()(t) / model_.phi2()(t + h));
    if (cfg_.renormalize && model_.kind() != ManifoldModel::Kind::Euclidean) {
      s.x = model_.project_point(s.x);
      s.u = model_.orthonormalize(t + h, s.x, s.u);
    }
    Curvature R_end = curvature_(t + h, s.x, s.u);
    // Exponential midpoint rule for dQ/dt = -Q R / 2; exact for constant scalar R.
    if (R_start.scalar && R_end.scalar) {
      const double f = std::exp(-0.25 * h * (R_start.s + R_end.s));
      if (s.q_is_scalar) {
        s.q_scalar *= f;
      } else {
        s.Q *= f;
      }
    } else {
      auto as_matrix = [&](const Curvature& c) { return c.scalar ? Mat(c.s * Mat::Identity(d_, d_)) : c.R; };
      const Mat A = (-0.25 * h) * (as_matrix(R_start) + as_matrix(R_end));
      const Mat M = Eigen::MatrixXd(A).exp();
      if (s.q_is_scalar) {
        s.Q = s.q_scalar * M;
        s.q_is_scalar = false;
      } else {
        s.Q = s.Q * M;
      }
    }
    R_start = std::move(R_end);
  }

  Curvature curvature(double t, const Vec& x, const Mat& u) const { return curvature_(t, x, u); }

 private:
  const ManifoldModel& model_;
  const DriftField& drift_;
  const SimConfig& cfg_;
  CurvatureEvaluator curvature_;
  int d_;
};

void store(PathEnsemble& ens, int p, std::size_t j, const PathState& s) {
  const int n = ens.ambient_dim(), d = ens.dim();
  double* rec = ens.record(p, j);
  Eigen::Map<Eigen::VectorXd>(rec, n) = s.x;
  Eigen::Map<Eigen::MatrixXd>(rec + n, n, d) = s.u;
  if (s.q_is_scalar) {
    Eigen::Map<Eigen::MatrixXd>(rec + n + n * d, d, d) = s.q_scalar * Eigen::MatrixXd::Identity(d, d);
  } else {
    Eigen::Map<Eigen::MatrixXd>(rec + n + n * d, d, d) = s.Q;
  }
}

long grid_index(double t, const SimConfig& cfg) {
  const double hs = cfg.substep();
  const double pos = (t - cfg.t0) / hs;
  const long k = std::lround(pos);
  if (t < cfg.t0 - 1e-12 || t > cfg.T + 1e-12 * (1.0 + std::abs(cfg.T)) || std::abs(pos - k) > 1e-7) {
    throw DomainError("time " + std::to_string(t) + " is not on the simulation grid (step " + std::to_string(hs) +
                      ")");
  }
  return k;
}

}  // namespace

PathEnsemble simulate(const ManifoldModel& model, const DriftField& drift, const Vec& x0, const SimConfig& cfg,
                      const std::vector<double>& times) {
  cfg.validate();
  drift.check_compatible(model);
  model.check_point(x0);
  if (model.is_evolving() && !model.phi2().covers(cfg.T)) throw DomainError("phi^2 does not cover the horizon");

  const long per_step = 1L << cfg.refine_level;
  const long total = static_cast<long>(cfg.steps) * per_step;
  // Partition: t0, T, requested times and every record_stride-th step.
  std::vector<std::pair<long, double>> marks{{0, cfg.t0}, {total, cfg.T}};
  for (double t : times) marks.emplace_back(grid_index(t, cfg), t);
  if (cfg.record_stride > 0) {
    for (long k = cfg.record_stride; k < cfg.steps; k += cfg.record_stride) {
      marks.emplace_back(k * per_step, cfg.t0 + (cfg.T - cfg.t0) * static_cast<double>(k) / cfg.steps);
    }
  }
  std::sort(marks.begin(), marks.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<long> idx;
  std::vector<double> partition;
  for (const auto& [k, t] : marks) {
    if (!idx.empty() && idx.back() == k) {
      // Prefer the caller's spelling of a requested time.
      if (std::find(times.begin(), times.end(), t) != times.end()) partition.back() = t;
      continue;
    }
    idx.push_back(k);
    partition.push_back(t);
  }

  const double work = static_cast<double>(cfg.n_paths) * static_cast<double>(total);
  if (work > cfg.max_work) {
    throw BudgetExceeded("simulation work " + std::to_string(work) + " exceeds budget " + std::to_string(cfg.max_work));
  }
  const int n = model.ambient_dim(), d = model.dim();
  const double bytes = 8.0 * cfg.n_paths * static_cast<double>(partition.size()) * (n + n * d + d * d);
  if (bytes > cfg.max_bytes) {
    throw BudgetExceeded("ensemble storage " + std::to_string(bytes) + " bytes exceeds budget " +
                         std::to_string(cfg.max_bytes));
  }

  PathEnsemble ens(model, drift, x0, cfg, std::move(partition), std::move(idx));
  const ManifoldModel& m = ens.model();
  const DriftField& z = ens.drift();
  const Integrator integ(m, z, ens.config());
  const NormalSource src(cfg.seed, cfg.stream);
  const double h = cfg.step();
  const double hs = cfg.substep();
  const Mat u0 = m.frame_at(cfg.t0, x0);
  std::vector<double> incr;
  double dW[kMaxAmbient];

  for (int p = 0; p < cfg.n_paths; ++p) {
    const std::uint64_t path = cfg.path_offset + static_cast<std::uint64_t>(p);
    PathState s{x0, u0, Mat::Identity(d, d)};
    store(ens, p, 0, s);
    Curvature R = integ.curvature(cfg.t0, s.x, s.u);
    std::size_t next = 1;
    for (long k = 0; k < total; ++k) {
      const long coarse = k / per_step;
      const long sub = k % per_step;
      const double t = cfg.t0 + hs * static_cast<double>(k);
      if (cfg.refine_level == 0) {
        src.normals(path, static_cast<std::uint64_t>(coarse), 0, dW, d);
        const double sh = std::sqrt(h);
        for (int a = 0; a < d; ++a) dW[a] *= sh;
        integ.step(s, t, hs, dW, R);
      } else {
        if (sub == 0) bridge_increments(src, path, static_cast<std::uint64_t>(coarse), cfg.refine_level, d, h, incr);
        integ.step(s, t, hs, incr.data() + sub * d, R);
      }
      if (next < ens.n_records() && ens.record_substeps()[next] == k + 1) {
        store(ens, p, next, s);
        s.Q = Mat::Identity(d, d);
        s.q_scalar = 1.0;
        s.q_is_scalar = true;
        ++next;
      }
    }
  }
  return ens;
}

std::vector<Mat> q_functional(const PathEnsemble& ensemble, double r, double t) {
  if (r > t) throw DomainError("q_functional needs r <= t");
  const std::size_t i = ensemble.index_of(r);
  const std::size_t k = ensemble.index_of(t);
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(ensemble.n_paths()));
  for (int p = 0; p < ensemble.n_paths(); ++p) out.push_back(ensemble.q(p, i, k));
  return out;
}

PathEnsemble replay(const PathEnsemble& ensemble, const std::vector<double>& new_times) {
  SimConfig cfg = ensemble.config();
  for (double t : new_times) {
    if (t < cfg.t0 - 1e-12 || t > cfg.T + 1e-12) throw IncompatibleConfig("replay time outside [t0, T]");
  }
  auto on_grid = [&](const SimConfig& c) {
    for (double t : new_times) {
      try {
        grid_index(t, c);
      } catch (const DomainError&) {
        return false;
      }
    }
    return true;
  };
  while (!on_grid(cfg)) {
    if (++cfg.refine_level > 16) throw IncompatibleConfig("replay times are not dyadic refinements of the grid");
  }
  std::vector<double> times = ensemble.partition();
  times.insert(times.end(), new_times.begin(), new_times.end());
  std::sort(times.begin(), times.end());
  return simulate(ensemble.model(), ensemble.drift(), ensemble.start(), cfg, times);
}

namespace {

constexpr char kMagic[8] = {'P', 'G', 'A', 'P', 'E', 'N', 'S', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IncompatibleConfig("truncated ensemble file");
  return v;
}

double model_parameter(const ManifoldModel& m) {
  switch (m.kind()) {
    case ManifoldModel::Kind::Sphere:
      return m.radius();
    case ManifoldModel::Kind::Hyperbolic:
      return m.curvature();
    default:
      return 0.0;
  }
}

}  // namespace

void write_ensemble(const std::string& path, const PathEnsemble& ens) {
  static_assert(std::endian::native == std::endian::little, "ensemble dumps assume a little-endian host");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  const SimConfig& c = ens.config();
  os.write(kMagic, 8);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ens.ambient_dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ens.dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ens.model().kind()));
  put<double>(os, model_parameter(ens.model()));
  put<std::uint64_t>(os, c.seed);
  put<std::uint64_t>(os, c.stream);
  put<std::uint64_t>(os, c.path_offset);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(c.n_paths));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(c.steps));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(c.refine_level));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(c.scheme));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(c.record_stride));
  put<std::uint32_t>(os, c.renormalize ? 1u : 0u);
  put<double>(os, c.t0);
  put<double>(os, c.T);
  for (Eigen::Index i = 0; i < ens.start().size(); ++i) put<double>(os, ens.start()[i]);
  put<std::uint64_t>(os, ens.n_records());
  for (std::size_t j = 0; j < ens.n_records(); ++j) {
    put<double>(os, ens.partition()[j]);
    put<std::int64_t>(os, ens.record_substeps()[j]);
  }
  for (int p = 0; p < ens.n_paths(); ++p) {
    for (std::size_t j = 0; j < ens.n_records(); ++j) {
      os.write(reinterpret_cast<const char*>(ens.record(p, j)),
               static_cast<std::streamsize>(ens.record_size() * sizeof(double)));
    }
  }
  if (!os) throw Error("failed writing " + path);
}

PathEnsemble read_ensemble(const std::string& path, const ManifoldModel& model, const DriftField& drift) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw IncompatibleConfig(path + " is not an ensemble dump");
  if (get<std::uint32_t>(is) != kVersion) throw IncompatibleConfig("unsupported ensemble version");
  const auto n = get<std::uint32_t>(is);
  const auto d = get<std::uint32_t>(is);
  const auto kind = get<std::uint32_t>(is);
  const double param = get<double>(is);
  if (static_cast<int>(n) != model.ambient_dim() || static_cast<int>(d) != model.dim() ||
      kind != static_cast<std::uint32_t>(model.kind()) || param != model_parameter(model)) {
    throw IncompatibleConfig("ensemble dump was produced for a different model");
  }
  SimConfig c;
  c.seed = get<std::uint64_t>(is);
  c.stream = get<std::uint64_t>(is);
  c.path_offset = get<std::uint64_t>(is);
  c.n_paths = static_cast<int>(get<std::uint32_t>(is));
  c.steps = static_cast<int>(get<std::uint32_t>(is));
  c.refine_level = static_cast<int>(get<std::uint32_t>(is));
  c.scheme = static_cast<Scheme>(get<std::uint32_t>(is));
  c.record_stride = static_cast<int>(get<std::uint32_t>(is));
  c.renormalize = get<std::uint32_t>(is) != 0;
  c.t0 = get<double>(is);
  c.T = get<double>(is);
  Vec x0(static_cast<Eigen::Index>(n));
  for (std::uint32_t i = 0; i < n; ++i) x0[i] = get<double>(is);
  const auto records = get<std::uint64_t>(is);
  std::vector<double> partition(records);
  std::vector<long> substeps(records);
  for (std::uint64_t j = 0; j < records; ++j) {
    partition[j] = get<double>(is);
    substeps[j] = static_cast<long>(get<std::int64_t>(is));
  }
  PathEnsemble ens(model, drift, x0, c, std::move(partition), std::move(substeps));
  for (int p = 0; p < ens.n_paths(); ++p) {
    for (std::size_t j = 0; j < ens.n_records(); ++j) {
      is.read(reinterpret_cast<char*>(ens.record(p, j)),
              static_cast<std::streamsize>(ens.record_size() * sizeof(double)));
    }
  }
  if (!is) throw IncompatibleConfig("truncated ensemble file");
  return ens;
}

}  // namespace pathgap
