#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fsac {

// Seed for substream `stream` of a root seed (SplitMix64 output function on
// state root + (stream+1) * golden ratio). Applying the rule recursively
// gives per-replication and per-draw streams that never collide, so parallel
// and serial replication orders produce the same data.
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic Gaussian stream. mt19937_64 has a standard-mandated output
// sequence and the Box-Muller transform below is explicit, so a seed pins
// the stream exactly (std::normal_distribution is implementation-defined
// and would not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on (0, 1]; never returns 0, so log() below is safe.
  double uniform01() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  // One standard normal draw; consumes exactly two uniforms.
  double gaussian() {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace fsac
