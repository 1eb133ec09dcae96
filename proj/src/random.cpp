#include "canopyflux/random.hpp"

#include <cmath>
#include <numbers>

namespace canopyflux {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = splitmix64(seed);
  for (auto step : path) state = splitmix64(state ^ splitmix64(step + 0x632be59bd9b4e019ULL));
  return RandomStream(state);
}

std::size_t RandomStream::below(std::size_t bound) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t n = bound;
  const std::uint64_t limit = max() - (max() % n + 1) % n;
  std::uint64_t x = engine_();
  while (x > limit) x = engine_();
  return static_cast<std::size_t>(x % n);
}

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RandomStream::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace canopyflux
