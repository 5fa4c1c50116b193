#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "dcls/errors.hpp"
#include "dcls/jacobi.hpp"

namespace dcls {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Independent stream seed for sub-stream `stream` of `master`.
/// Monte Carlo trial t uses derive_seed(master, t); sample row i uses derive_seed(seed, i).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t s = master ^ (0xD1B54A32D192ED03ull * (stream + 1));
  splitmix64(s);
  return splitmix64(s);
}

/// xoshiro256** seeded through splitmix64. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept {
    for (auto& w : s_) w = splitmix64(seed);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0,1).
  double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() noexcept {
    double u1 = uniform_open(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Marsaglia-Tsang; shapes below 1 are boosted through U^(1/a).
  double gamma(double shape) noexcept {
    if (shape < 1.0) {
      double g = gamma(shape + 1.0);
      return g * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// m points in [-1,1]^d stored point-major, with the inputs that reproduce them.
struct SampleSet {
  std::vector<double> points;
  JacobiParams params;
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::size_t d = 0;

  std::span<const double> point(std::size_t i) const { return {points.data() + i * d, d}; }
};

/// One draw from the normalized beta measure on [-1,1].
inline double draw_coordinate(const JacobiParams& p, Xoshiro256& rng) {
  if (p.is_chebyshev()) return std::cos(std::numbers::pi * rng.uniform());
  if (p.is_legendre()) return 2.0 * rng.uniform() - 1.0;
  // density ~ (1-t)^theta1 (1+t)^theta2 means (1+t)/2 ~ Beta(theta2+1, theta1+1)
  double g1 = rng.gamma(p.theta2() + 1.0);
  double g2 = rng.gamma(p.theta1() + 1.0);
  double t = 2.0 * (g1 / (g1 + g2)) - 1.0;
  return std::clamp(t, -1.0, 1.0);
}

/// m i.i.d. draws from the tensorized measure. Row i depends only on (seed, i).
inline SampleSet draw_samples(const JacobiParams& params, std::size_t d, std::size_t m, std::uint64_t seed) {
  if (m < 1 || d < 1) throw DomainError("draw_samples requires m >= 1 and d >= 1");
  SampleSet s{std::vector<double>(m * d), params, seed, m, d};
  for (std::size_t i = 0; i < m; ++i) {
    Xoshiro256 rng(derive_seed(seed, i));
    for (std::size_t j = 0; j < d; ++j) s.points[i * d + j] = draw_coordinate(params, rng);
  }
  return s;
}

/// ||v||_m = sqrt(mean of squares).
inline double empirical_norm(std::span<const double> values) {
  if (values.empty()) throw DomainError("empirical_norm of zero values");
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s / static_cast<double>(values.size()));
}

} // namespace dcls
