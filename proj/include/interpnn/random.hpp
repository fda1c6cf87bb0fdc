#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace interpnn {

namespace detail {

// SplitMix64 finalizer, used to derive decorrelated engine seeds from
// (seed, stream) pairs.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Identifies one reproducible random stream. Equal (seed, stream) pairs
/// produce bit-identical draw sequences regardless of thread count, so
/// parallel workers are given disjoint stream ids derived from a base seed.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Derives a child stream; saltings with distinct (a, b) do not collide
  /// in practice (64-bit mixed space).
  [[nodiscard]] RngSeed substream(std::uint64_t a, std::uint64_t b = 0) const {
    return RngSeed{seed, detail::mix64(detail::mix64(stream ^ a) + b)};
  }
};

/// Deterministic random generator. The engine is std::mt19937_64 (raw output
/// is pinned by the standard); all distributions are drawn with the explicit
/// algorithms below rather than std:: distribution objects, so sequences do
/// not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(RngSeed s) {
    const std::uint64_t a = detail::mix64(s.seed);
    const std::uint64_t b = detail::mix64(a ^ s.stream);
    const std::uint64_t c = detail::mix64(b ^ 0xD1B54A32D192ED03ull);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), bound >= 1. Modulo rejection keeps the
  /// draw unbiased.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  bool next_bernoulli(double p) { return next_unit() < p; }

  /// Standard normal via the Marsaglia polar method (pairs are cached).
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double next_normal(double mean, double stddev) { return mean + stddev * next_normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace interpnn
