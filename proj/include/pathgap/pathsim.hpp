#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathgap/geometry.hpp"

namespace pathgap {

enum class Scheme { GeodesicEuler, GeodesicHeun };

std::string_view to_string(Scheme s);

struct SimConfig {
  double t0 = 0.0;
  double T = 1.0;
  int steps = 256;  ///< uniform steps on [t0, T]
  int n_paths = 1;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  /// Index of the first path; batches with consecutive offsets reproduce one large run.
  std::uint64_t path_offset = 0;
  Scheme scheme = Scheme::GeodesicEuler;
  /// Record every `record_stride`-th step in addition to the requested times (0: requested times only).
  int record_stride = 1;
  /// Each step is split into 2^refine_level substeps by Brownian bridges.
  int refine_level = 0;
  bool renormalize = true;
  double max_work = 4e9;   ///< bound on n_paths * substeps
  double max_bytes = 2e9;  ///< bound on stored record data

  double step() const { return (T - t0) / steps; }
  double substep() const { return step() / static_cast<double>(1 << refine_level); }
  void validate() const;
};

/// Simulated paths recorded at a partition of [t0, T].
///
/// Per path and partition time t_j the ensemble stores the point x_j, the
/// g-orthonormal frame u_j and the damped propagator Phi_j = Q_{t_{j-1}, t_j}
/// written in frame coordinates (Phi_0 = id). In frame coordinates parallel
/// transport is the identity, so Q_{t_i, t_k} = Phi_{i+1} ... Phi_k.
class PathEnsemble {
 public:
  PathEnsemble(ManifoldModel model, DriftField drift, Vec x0, SimConfig cfg, std::vector<double> partition,
               std::vector<long> record_substeps);

  const ManifoldModel& model() const noexcept { return model_; }
  const DriftField& drift() const noexcept { return drift_; }
  const SimConfig& config() const noexcept { return cfg_; }
  const Vec& start() const noexcept { return x0_; }
  int n_paths() const noexcept { return cfg_.n_paths; }
  int dim() const noexcept { return d_; }
  int ambient_dim() const noexcept { return n_; }
  const std::vector<double>& partition() const noexcept { return partition_; }
  const std::vector<long>& record_substeps() const noexcept { return record_substeps_; }
  std::size_t n_records() const noexcept { return partition_.size(); }

  /// Index of `t` in the partition; DomainError if absent.
  std::size_t index_of(double t) const;
  bool contains(double t) const noexcept;

  Vec point(int path, std::size_t j) const;
  Mat frame(int path, std::size_t j) const;
  Mat phi(int path, std::size_t j) const;
  /// Q_{t_i, t_k} in frame coordinates, i <= k.
  Mat q(int path, std::size_t i, std::size_t k) const;
  /// Parallel transport //_{t_i, t_k} of an ambient tangent vector at x(t_i).
  Vec transport(int path, std::size_t i, std::size_t k, const Vec& w) const;
  /// Frame coordinates u_j^{-1} w of a tangent vector at x(t_j).
  Vec to_frame(int path, std::size_t j, const Vec& w) const;

  double* record(int path, std::size_t j) noexcept { return data_.data() + offset(path, j); }
  const double* record(int path, std::size_t j) const noexcept { return data_.data() + offset(path, j); }
  std::size_t record_size() const noexcept { return static_cast<std::size_t>(n_ + n_ * d_ + d_ * d_); }

 private:
  std::size_t offset(int path, std::size_t j) const noexcept {
    return (static_cast<std::size_t>(path) * partition_.size() + j) * record_size();
  }

  ManifoldModel model_;
  DriftField drift_;
  Vec x0_;
  SimConfig cfg_;
  int n_;
  int d_;
  std::vector<double> partition_;
  std::vector<long> record_substeps_;
  std::vector<double> data_;
};

/// Simulates dX = u o dB + Z/2 dt with horizontal frame and damped propagator.
/// Every time in `times` must lie on the step grid of `cfg`.
PathEnsemble simulate(const ManifoldModel& model, const DriftField& drift, const Vec& x0, const SimConfig& cfg,
                      const std::vector<double>& times);

/// Q_{r,t} for every path as a list of frame-coordinate matrices.
std::vector<Mat> q_functional(const PathEnsemble& ensemble, double r, double t);

/// Re-simulates with the same Brownian motion on a partition that also contains
/// `new_times`, refining steps by Brownian bridges when needed.
PathEnsemble replay(const PathEnsemble& ensemble, const std::vector<double>& new_times);

/// Binary dump (format documented in docs/ensemble_format.md).
void write_ensemble(const std::string& path, const PathEnsemble& ensemble);
PathEnsemble read_ensemble(const std::string& path, const ManifoldModel& model, const DriftField& drift);

}  // namespace pathgap
