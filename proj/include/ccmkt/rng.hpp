#pragma once

// Self-contained PRNG and variate generation.  Everything here is fixed
// by the artifact (no platform generators) so sample streams reproduce
// bit-for-bit wherever the same floating-point libm behavior holds.
//
// Sample j of a stream is drawn from its own substream seeded by
// derive(seed, j); a sample's value never depends on how many samples
// were drawn before it (prefix stability).

#include <cmath>
#include <cstdint>

namespace ccmkt::rng {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D4A129148C0EBDull;
  z ^= z >> 31;
  return z;
}

struct SplitMix64 {
  std::uint64_t state = 0;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += kGolden;
    return mix64(state);
  }
  // uniform in [0, 1), 53 random bits
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t derive(std::uint64_t base, std::uint64_t part) {
  return mix64(base ^ mix64(part + kGolden));
}

inline std::uint64_t derive(std::uint64_t base, std::uint64_t a,
                            std::uint64_t b) {
  return derive(derive(base, a), b);
}

// standard normal via Box-Muller; 1-u keeps the log argument in (0, 1]
inline double normal(SplitMix64& g) {
  const double u1 = g.next_double();
  const double u2 = g.next_double();
  return std::sqrt(-2.0 * std::log1p(-u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Marsaglia-Tsang squeeze, shape >= 1
inline double gamma_ge1(SplitMix64& g, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x, v;
    do {
      x = normal(g);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = g.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u == 0.0) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline double gamma_draw(SplitMix64& g, double shape) {
  if (shape < 1.0) {
    const double base = gamma_ge1(g, shape + 1.0);
    const double u = g.next_double();
    return base * std::pow(1.0 - u, 1.0 / shape);
  }
  return gamma_ge1(g, shape);
}

inline double beta_draw(SplitMix64& g, double a, double b) {
  const double x = gamma_draw(g, a);
  const double y = gamma_draw(g, b);
  const double s = x + y;
  return s > 0.0 ? x / s : 0.5;
}

}  // namespace ccmkt::rng
