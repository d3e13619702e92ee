#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace veram {

/// Counter-based SplitMix64 generator.
///
/// The integer stream is fully specified by the seed (Steele et al.'s
/// SplitMix64 finalizer over an incrementing counter), so any two builds
/// produce the same draws for the same seed. Floating-point draws are
/// derived from the integer stream with plain IEEE arithmetic; normal()
/// uses the basic Box-Muller transform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1): top 53 bits of the stream.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double normal() {
    // (0,1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n). Modulo bias is irrelevant at the sizes used
  /// here (n far below 2^32) and keeps the mapping trivially specified.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Deterministic stream derivation: feed each label through the
  /// SplitMix64 finalizer chained onto the previous state.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    Rng r(a ^ (0x9E3779B97F4A7C15ull * (b + 1)));
    return r.next_u64();
  }
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix(mix(a, b), c);
  }
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return mix(mix(a, b, c), d);
  }

 private:
  std::uint64_t state_;
};

}  // namespace veram
