// Seeded random streams.
//
// Every replicate, cell or worker draws from its own stream, derived from a
// master seed and a tuple of stream coordinates by SplitMix64 mixing. Draws
// are produced from raw engine output with fixed arithmetic, so a given
// (seed, coordinates) pair yields the same numbers on every platform.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace crindep {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Independent stream for the given coordinates under a master seed.
  static Rng stream(std::uint64_t master,
                    std::initializer_list<std::uint64_t> coordinates) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t c : coordinates) s = splitmix64(s ^ splitmix64(c + 1));
    return Rng(s);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound); bound > 0. Lemire's multiply-shift with
  /// rejection, so the result is unbiased.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = next();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = next();
        m = static_cast<unsigned __int128>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crindep
