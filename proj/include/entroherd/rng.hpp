#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace entroherd {

// Counter-based generator (splitmix64 walk) with independent named streams.
// The same (seed, name, instance) triple always yields the same sequence,
// independent of platform or standard library, which is what makes runs
// byte-reproducible.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name, std::uint64_t instance = 0) {
    std::uint64_t k = seed;
    k = finalize(k ^ (fnv1a(name) + 0x9E3779B97F4A7C15ull));
    k = finalize(k ^ (instance * 0xD1B54A32D192ED03ull + 0x2545F4914F6CDD1Dull));
    state_ = k;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return finalize(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection sampled to kill modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(t);
    has_cached_ = true;
    return r * std::cos(t);
  }

 private:
  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ull;
    }
    return h;
  }

  std::uint64_t state_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace entroherd
