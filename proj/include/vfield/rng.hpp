#pragma once

#include "vfield/types.hpp"

#include <cstdint>
#include <random>

namespace vfield {

/// Mixes an arbitrary number of 64-bit words into one seed (splitmix64 chain).
/// Used to derive independent, reproducible RNG streams from (seed, epoch,
/// batch, ...) tuples without carrying engine state across checkpoints.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix_seed(mix_seed(a) ^ (b + 0x9e3779b97f4a7c15ull), rest...);
}

/// Deterministic RNG wrapper. Distribution sampling is hand-rolled so results
/// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  Real uniform() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // modulo bias is negligible for n << 2^64; keep it simple and portable
    return next_u64() % n;
  }

  /// Standard normal via Box-Muller.
  Real gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    Real u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const Real u2 = uniform();
    const Real r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  /// Uniform direction on the unit sphere.
  Vec3 unit_vector() {
    const Real z = uniform(-1.0, 1.0);
    const Real phi = uniform(0.0, 2.0 * kPi);
    const Real s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
  }

 private:
  std::mt19937_64 engine_;
  Real spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace vfield
