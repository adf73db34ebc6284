#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "evsp/evsp.hpp"

namespace evsp::fixture {

inline SphereGrid small_grid(std::size_t M, std::size_t N, std::size_t K, std::size_t R) {
  return {M, N, K, R, SphereGrid::even_latitudes(M, -60.0, 60.0)};
}

inline Tensor4 random_tensor(std::size_t M, std::size_t N, std::size_t K, std::size_t R, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Tensor4 t(M, N, K, R);
  for (auto& v : t.data()) v = normal(gen);
  return t;
}

inline InnovationField random_innovations(std::size_t M, std::size_t N, std::size_t K, std::size_t R,
                                          std::uint64_t seed) {
  return {small_grid(M, N, K + 2, R), random_tensor(M, N, K, R, seed)};
}

inline TemporalParams random_temporal(std::size_t M, std::size_t N, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-0.4, 0.4), s(0.5, 2.0);
  TemporalParams p(M, N);
  for (auto& site : p.sites) site = {u(gen) + 0.3, u(gen) * 0.5, s(gen)};
  return p;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace evsp::fixture
