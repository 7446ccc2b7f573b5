#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mvp {

using Rng = std::mt19937_64;

// Every random stream in an experiment is derived from one top-level seed.
// The component name is hashed (FNV-1a) together with the seed and a
// per-instance index, then mixed through splitmix64, so streams for
// different components or instances never alias.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view component,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view component,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(seed, component, index));
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

// Uniform integer in [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(rng);
}

}  // namespace mvp
