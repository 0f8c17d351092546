#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

#include "switchctl/system.hpp"

namespace switchctl::rng {

// Deterministic across platforms: mt19937_64 bit stream mapped to doubles by
// hand instead of std::uniform_real_distribution (whose output is
// implementation-defined).

inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

inline int uniform_int(std::mt19937_64& gen, int lo, int hi) {
  // inclusive bounds; small ranges only, modulo bias is negligible for 64-bit draws
  return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline double normal(std::mt19937_64& gen) {
  double u1 = uniform01(gen);
  while (u1 <= 1e-300) u1 = uniform01(gen);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

inline Eigen::VectorXd gaussian_vector(std::mt19937_64& gen, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(gen);
  return v;
}

inline Eigen::VectorXd unit_vector(std::mt19937_64& gen, int n) {
  Eigen::VectorXd v = gaussian_vector(gen, n);
  double nrm = v.norm();
  while (nrm < 1e-12) {
    v = gaussian_vector(gen, n);
    nrm = v.norm();
  }
  return v / nrm;
}

inline SwitchingSignal random_signal(int num_modes, int length, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  SwitchingSignal sigma;
  sigma.values.reserve(static_cast<std::size_t>(length));
  for (int k = 0; k < length; ++k) sigma.values.push_back(uniform_int(gen, 1, num_modes));
  return sigma;
}

}  // namespace switchctl::rng
