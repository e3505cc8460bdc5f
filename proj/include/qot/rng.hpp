#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace qot {

/// Counter-based generator (splitmix64): the state is a Weyl counter and each
/// output is a finalizer hash of it, so streams keyed by distinct start states
/// never interleave. The integer stream is platform independent.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t key) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

enum class StreamRole : std::uint64_t { source = 1, fresh_target = 2 };

/// One independent stream per (seed, dimension, role) tuple.
inline SplitMix64 make_stream(std::uint64_t seed, std::uint64_t dim,
                              StreamRole role) {
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t key = mix(seed + 0x9E3779B97F4A7C15ULL);
  key = mix(key ^ (dim * 0xD1342543DE82EF95ULL));
  key = mix(key ^ (static_cast<std::uint64_t>(role) * 0xAF251AF3B0F025B5ULL));
  return SplitMix64(key);
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform_unit(SplitMix64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; consumes exactly two uniforms.
inline void normal_pair(SplitMix64& rng, double& z0, double& z1) {
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  z0 = rad * std::cos(ang);
  z1 = rad * std::sin(ang);
}

}  // namespace qot
