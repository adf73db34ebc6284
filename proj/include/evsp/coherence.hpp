#pragma once

// Dependence of spectral coefficients across latitude bands: an AR(1)
// recursion in latitude whose per-wavenumber coefficient is
// phi(c) = xi / (1 + 4 sin^2(c pi / N))^tau, optionally band-dependent.

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "spectral.hpp"

namespace evsp {

struct CoherencePair {
  double xi = 0.0;
  double tau = 0.0;

  void validate() const {
    if (!(xi >= 0.0 && xi < 1.0)) throw validation_error("coherence: xi outside [0, 1)");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw validation_error("coherence: tau must be nonnegative");
  }
  friend bool operator==(const CoherencePair&, const CoherencePair&) = default;
};

enum class CoherenceMode { stationary, nonstationary };

/// Latitudinal coherence. In nonstationary mode, the coefficient for the step
/// from band m to band m + 1 comes from `tropical[m]` when present and from
/// `global` otherwise; bands are ordered south to north.
struct LatitudeCoherenceProfile {
  CoherenceMode mode = CoherenceMode::stationary;
  CoherencePair global;
  std::map<std::size_t, CoherencePair> tropical;
  double tropic_bound_deg = 23.0;

  void validate() const {
    global.validate();
    if (mode == CoherenceMode::stationary && !tropical.empty())
      throw validation_error("coherence: stationary profile carries tropical pairs");
    for (const auto& [m, pair] : tropical) pair.validate();
  }

  const CoherencePair& step_pair(std::size_t lower_band) const {
    if (mode == CoherenceMode::nonstationary)
      if (auto it = tropical.find(lower_band); it != tropical.end()) return it->second;
    return global;
  }
};

inline double coherence_value(const CoherencePair& pair, std::size_t c, std::size_t N) {
  if (pair.tau == 0.0) return pair.xi;
  return pair.xi / std::pow(1.0 + sin2_term(c, N), pair.tau);
}

/// AR(1) coefficient linking band `lower_band` to band `lower_band + 1`.
inline double step_coefficient(const LatitudeCoherenceProfile& profile, std::size_t lower_band, std::size_t c,
                               std::size_t N) {
  return coherence_value(profile.step_pair(lower_band), c, N);
}

inline double cross_band_correlation(const LatitudeCoherenceProfile& profile, std::size_t m, std::size_t m2,
                                     std::size_t c, std::size_t N) {
  if (m > m2) std::swap(m, m2);
  double rho = 1.0;
  for (std::size_t j = m; j < m2; ++j) rho *= step_coefficient(profile, j, c, N);
  return rho;
}

/// Standard deviation of the recursion innovation entering band m, chosen so
/// every band keeps unit variance.
inline double latitude_innovation_sd(const LatitudeCoherenceProfile& profile, std::size_t m, std::size_t c,
                                     std::size_t N) {
  if (m == 0) return 1.0;
  const double phi = step_coefficient(profile, m - 1, c, N);
  return std::sqrt(1.0 - phi * phi);
}

/// Correlation matrix of bands first..first+count-1 at wavenumber c.
inline Eigen::MatrixXd coherence_covariance(const LatitudeCoherenceProfile& profile, std::size_t first,
                                            std::size_t count, std::size_t c, std::size_t N) {
  Eigen::MatrixXd out(count, count);
  for (std::size_t a = 0; a < count; ++a) {
    out(a, a) = 1.0;
    for (std::size_t b = a + 1; b < count; ++b)
      out(a, b) = out(b, a) = cross_band_correlation(profile, first + a, first + b, c, N);
  }
  return out;
}

/// Bands with |latitude| below the bound that have a northern neighbour, i.e.
/// the lower bands of the tropical adjacent pairs.
inline std::vector<std::size_t> tropical_bands(const std::vector<double>& latitudes, double bound_deg) {
  std::vector<std::size_t> out;
  const double bound = bound_deg * std::numbers::pi / 180.0;
  for (std::size_t m = 0; m + 1 < latitudes.size(); ++m)
    if (std::abs(latitudes[m]) < bound) out.push_back(m);
  return out;
}

}  // namespace evsp
