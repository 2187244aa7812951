#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qgan {

/// Deterministic random source. All distribution transforms are implemented
/// here (not via std:: distributions, whose output is implementation
/// defined) so that a seed reproduces the same stream on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1) with 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, cosine branch; consumes two uniforms per draw.
  double normal(double mean = 0.0, double stddev = 1.0);

  // [0, n), n >= 1
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

private:
  std::mt19937_64 engine_;
};

// Stream seed for a named subsystem, derived from one root seed as
// splitmix64(root XOR fnv1a64(stream)). Documented in the README so every
// artifact is reproducible from the root seed alone.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace qgan
