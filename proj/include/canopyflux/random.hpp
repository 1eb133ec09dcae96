#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace canopyflux {

/// Seeded random stream with platform-independent output.
///
/// `std::mt19937_64` is bit-specified by the standard but the standard
/// distributions are not, so bounded integers, uniforms and normals are
/// derived here from raw 64-bit draws.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Independent sub-stream keyed by `seed` and a path such as
  /// {tag, repeat, fold}. Same key, same stream, regardless of call order.
  static RandomStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform integer in [0, bound); bound must be > 0.
  std::size_t below(std::size_t bound);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (no cached second variate).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace canopyflux
