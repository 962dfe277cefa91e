#pragma once

#include <array>
#include <cstdint>

namespace pathgap {

/// SplitMix64 finalizer, used to derive independent stream keys.
std::uint64_t splitmix64(std::uint64_t z) noexcept;

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter block(Counter ctr, Key key) noexcept;
};

/// Standard normal draws addressed by (path, step, tag) under a (seed, stream) key.
///
/// Each address yields two normals via Box-Muller on one Philox block, so
/// any draw can be regenerated independently of evaluation order.
class NormalSource {
 public:
  NormalSource(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  /// Fills out[0..n) with N(0,1) draws for the given address.
  /// `tag` distinguishes Brownian-bridge levels and other consumers.
  void normals(std::uint64_t path, std::uint64_t step, std::uint32_t tag, double* out, int n) const noexcept;
  /// Uniform draw in (0, 1).
  double uniform(std::uint64_t path, std::uint64_t step, std::uint32_t tag) const noexcept;

 private:
  Philox4x32::Key key_;
};

}  // namespace pathgap
