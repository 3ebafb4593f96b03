#pragma once

// Seeded generator streams and the elementary variates used by the
// samplers. Samplers are templates over any 64-bit UniformRandomBitGenerator
// and mutate only the generator passed in.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "gwp/errors.hpp"

namespace gwp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of replicate `index` under `master`:
/// splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019)).
/// Replicate r always gets the same stream whatever order replicates run in.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(stream_seed(master, index));
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
template <typename URBG>
double uniform_open01(URBG& rng) {
  static_assert(URBG::max() - URBG::min() == std::numeric_limits<std::uint64_t>::max(),
                "uniform_open01 expects a full-range 64-bit generator");
  const std::uint64_t bits = static_cast<std::uint64_t>(rng() - URBG::min()) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// ln G with G ~ Gamma(shape, 1). Shapes below one use
/// Gamma(shape) = Gamma(shape + 1) * U^(1/shape) on the log scale, so tiny
/// shapes do not underflow.
template <typename URBG>
double log_gamma_variate(URBG& rng, double shape) {
  if (!(shape > 0.0)) throw DomainError("log_gamma_variate: shape must be positive");
  if (shape < 1.0) {
    std::gamma_distribution<double> boosted(shape + 1.0, 1.0);
    const double g = boosted(rng);
    return std::log(g) + std::log(uniform_open01(rng)) / shape;
  }
  std::gamma_distribution<double> dist(shape, 1.0);
  return std::log(dist(rng));
}

template <typename URBG>
double gamma_variate(URBG& rng, double shape, double scale = 1.0) {
  return scale * std::exp(log_gamma_variate(rng, shape));
}

inline constexpr double kMaxPoissonMean = 1e18;

template <typename URBG>
std::int64_t poisson_variate(URBG& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  if (!(mean < kMaxPoissonMean)) throw DomainError("poisson_variate: mean overflows the count type");
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

template <typename URBG>
std::int64_t binomial_variate(URBG& rng, std::int64_t trials, double p) {
  if (trials <= 0 || !(p > 0.0)) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<std::int64_t> dist(trials, p);
  return dist(rng);
}

/// Latent beta mixing variable: p ~ Beta(rho, a) and theta = (1 - p) / p.
struct MixingDraw {
  double p = 0.5;
  double theta = 1.0;
  double log_theta = 0.0;
};

/// theta is drawn as the gamma ratio G_a / G_rho directly, which keeps
/// precision when p is close to 0 or 1.
template <typename URBG>
MixingDraw draw_mixing(URBG& rng, double rho, double a) {
  const double log_g_rho = log_gamma_variate(rng, rho);
  const double log_g_a = log_gamma_variate(rng, a);
  MixingDraw m;
  m.log_theta = log_g_a - log_g_rho;
  m.theta = std::exp(m.log_theta);
  m.p = 1.0 / (1.0 + m.theta);
  return m;
}

}  // namespace gwp
