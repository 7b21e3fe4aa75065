#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "irsdiag/types.hpp"

namespace irsdiag {

/// splitmix64 step, used both as a generator seeder and as a stable hash mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Order-sensitive hash combiner for deriving per-trial substream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) {
  std::uint64_t s = seed ^ (0x2545F4914F6CDD1Dull + value);
  return splitmix64(s);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return mix_seed(seed, h);
}

/// Seeded generator owned by a single trial. Draw helpers are hand-rolled so
/// sequences are stable regardless of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t integer(std::uint64_t bound) {  // uniform on [0, bound)
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound));
  }

  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  Complex complex_normal(double variance = 1.0) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-variance * std::log(u1));
    const double phi = 2.0 * M_PI * uniform();
    return Complex(r * std::cos(phi), r * std::sin(phi));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace irsdiag
