#include "pathgap/rng.hpp"

#include <cmath>
#include <numbers>

namespace pathgap {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in (0, 1) from two words.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Philox4x32::Counter Philox4x32::block(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

NormalSource::NormalSource(std::uint64_t seed, std::uint64_t stream) noexcept {
  const std::uint64_t mixed = stream == 0 ? seed : seed ^ splitmix64(stream);
  key_ = {static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32)};
}

void NormalSource::normals(std::uint64_t path, std::uint64_t step, std::uint32_t tag, double* out,
                           int n) const noexcept {
  for (int i = 0; i < n; i += 2) {
    const std::uint32_t block_tag = (tag << 8) | static_cast<std::uint32_t>(i / 2);
    const auto r = Philox4x32::block({static_cast<std::uint32_t>(step), block_tag,
                                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)},
                                     key_);
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    out[i] = rad * std::cos(ang);
    if (i + 1 < n) out[i + 1] = rad * std::sin(ang);
  }
}

double NormalSource::uniform(std::uint64_t path, std::uint64_t step, std::uint32_t tag) const noexcept {
  const auto r = Philox4x32::block({static_cast<std::uint32_t>(step), (tag << 8) | 0xFFu,
                                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)},
                                   key_);
  return to_unit(r[0], r[1]);
}

}  // namespace pathgap
