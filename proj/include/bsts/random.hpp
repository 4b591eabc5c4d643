#pragma once

#include "bsts/common.hpp"

#include <cmath>
#include <initializer_list>
#include <vector>

namespace bsts {

// Independent engine for (seed, stream...) keys. Used to give every chain,
// replication and forecast origin its own reproducible stream.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (auto k : keys) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

inline double draw_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double draw_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline Vector draw_normal_vector(Index n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector out(n);
  for (Index i = 0; i < n; ++i) out(i) = dist(rng);
  return out;
}

// Gamma with shape/rate.
inline double draw_gamma(double shape, double rate, Rng& rng) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

// Inverse gamma with shape/scale: 1 / Gamma(shape, rate = scale).
inline double draw_inv_gamma(double shape, double scale, Rng& rng) {
  return 1.0 / draw_gamma(shape, scale, rng);
}

inline double draw_beta(double a, double b, Rng& rng) {
  const double x = draw_gamma(a, 1.0, rng);
  const double y = draw_gamma(b, 1.0, rng);
  return x / (x + y);
}

inline bool draw_bernoulli(double p, Rng& rng) { return draw_uniform(rng) < p; }

}  // namespace bsts
