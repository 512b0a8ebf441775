#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace clotkit {

/// SplitMix64 finalizer. Bijective 64-bit mix with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over bytes; used to derive per-subject RNG streams from ids.
constexpr std::uint64_t hash_str(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based random stream: the i-th output is mix64(key + i * odd),
/// so a (seed, stream) pair plus a draw count fully determines every value
/// on every platform. No global state, trivially forkable.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix64(seed ^ mix64(stream))) {}

  std::uint64_t next_u64() noexcept {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform integer in [0, n); n = 0 returns 0. Fixed-point multiply on the
  /// high 32 bits (bias < 2^-32, irrelevant for the ranges used here).
  std::uint32_t next_below(std::uint32_t n) noexcept {
    return static_cast<std::uint32_t>(((next_u64() >> 32) * n) >> 32);
  }

  /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal() noexcept {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Independent derived stream; drawing from the fork never perturbs *this.
  CounterRng fork(std::uint64_t stream) const noexcept {
    return CounterRng(key_, mix64(stream + 0x51ed2701ab1c0457ULL));
  }

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace clotkit
