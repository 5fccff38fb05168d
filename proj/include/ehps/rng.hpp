#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ehps {

/// 64-bit FNV-1a over a byte string.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// SplitMix64 generator. All randomness in this library flows through this
/// generator so that outputs are reproducible across platforms and
/// implementations; std::random distributions are implementation-defined and
/// are not used.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  /// Generator keyed by (seed, string key): independent deterministic streams
  /// per dataset id or purpose tag.
  SplitMix64(std::uint64_t seed, std::string_view key) : state_(seed ^ fnv1a64(key)) {
    next();  // decorrelate nearby seeds
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r = next();
    while (r >= limit) r = next();
    return r % n;
  }

  /// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
  double gauss() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Gaussian scaled to sigma and clamped to [-limit, limit].
  double clamped_gauss(double sigma, double limit) {
    const double x = sigma * gauss();
    return x < -limit ? -limit : (x > limit ? limit : x);
  }

 private:
  std::uint64_t state_;
};

}  // namespace ehps
