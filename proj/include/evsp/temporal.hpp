#pragma once

// Per-site AR(2) temporal structure: Yule-Walker fitting, whitening of
// anomalies into spatial innovations, and the forward (colorizing) recursion.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "parallel.hpp"

namespace evsp {

struct Ar2Site {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double sigma = 1.0;

  bool stationary() const { return phi2 + phi1 < 1.0 && phi2 - phi1 < 1.0 && std::abs(phi2) < 1.0; }

  /// Marginal variance of the stationary AR(2) process.
  double stationary_variance() const {
    return sigma * sigma * (1.0 - phi2) / ((1.0 + phi2) * ((1.0 - phi2) * (1.0 - phi2) - phi1 * phi1));
  }
};

struct TemporalParams {
  std::size_t M = 0;
  std::size_t N = 0;
  std::vector<Ar2Site> sites;

  TemporalParams() = default;
  TemporalParams(std::size_t M_, std::size_t N_, Ar2Site fill = {}) : M(M_), N(N_), sites(M_ * N_, fill) {}

  Ar2Site& at(std::size_t m, std::size_t n) { return sites[m * N + n]; }
  const Ar2Site& at(std::size_t m, std::size_t n) const { return sites[m * N + n]; }

  void validate() const {
    if (sites.size() != M * N) throw validation_error("temporal params: site count differs from M*N");
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const auto& s = sites[i];
      if (!s.stationary() || !(s.sigma > 0.0) || !std::isfinite(s.sigma))
        throw validation_error("temporal params: site (" + std::to_string(i / N) + ", " + std::to_string(i % N) +
                               ") is not a stationary AR(2) with positive sigma");
    }
  }
};

/// Whitened innovations; K() == grid.K - 2.
struct InnovationField {
  SphereGrid grid;
  Tensor4 values;
};

/// Solves the lag-0..2 Yule-Walker equations for (phi1, phi2).
inline std::array<double, 2> yule_walker(double gamma0, double gamma1, double gamma2) {
  const double det = gamma0 * gamma0 - gamma1 * gamma1;
  if (!(det > 0.0)) return {gamma0 > 0.0 ? std::clamp(gamma1 / gamma0, -1.0, 1.0) : 0.0, 0.0};
  return {gamma1 * (gamma0 - gamma2) / det, (gamma0 * gamma2 - gamma1 * gamma1) / det};
}

/// Nearest point of the AR(2) stationarity triangle shrunk by `margin`.
inline std::array<double, 2> project_stationary(double phi1, double phi2, double margin = 1e-4) {
  const double top = 1.0 - margin;
  const double bottom = -1.0 + margin;
  if (phi2 + phi1 <= top && phi2 - phi1 <= top && phi2 >= bottom) return {phi1, phi2};
  const std::array<std::array<double, 2>, 3> corner{{{0.0, top}, {top - bottom, bottom}, {bottom - top, bottom}}};
  std::array<double, 2> best{};
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < 3; ++e) {
    const auto& a = corner[e];
    const auto& b = corner[(e + 1) % 3];
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double t = std::clamp(((phi1 - a[0]) * dx + (phi2 - a[1]) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
    const double px = a[0] + t * dx, py = a[1] + t * dy;
    const double d2 = (px - phi1) * (px - phi1) + (py - phi2) * (py - phi2);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = {px, py};
    }
  }
  return best;
}

/// Fits AR(2) to one site's K x R series (r fastest) by Yule-Walker on
/// autocovariances pooled across realizations. Non-stationary solutions are
/// projected into the triangle interior.
inline Ar2Site fit_ar2_site(std::span<const double> series, std::size_t K, std::size_t R) {
  if (series.size() != K * R) throw validation_error("fit_ar2_site: series length differs from K*R");
  if (K < 5) throw validation_error("fit_ar2_site: need at least 5 time steps");
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (*lo == *hi) throw numerical_error("zero-variance site");
  std::array<double, 3> gamma{};
  for (std::size_t h = 0; h < 3; ++h) {
    double s = 0.0;
    for (std::size_t k = 0; k + h < K; ++k)
      for (std::size_t r = 0; r < R; ++r) s += series[k * R + r] * series[(k + h) * R + r];
    gamma[h] = s / static_cast<double>(K * R);
  }
  const auto raw = yule_walker(gamma[0], gamma[1], gamma[2]);
  const auto [phi1, phi2] = project_stationary(raw[0], raw[1]);
  const double sd = std::sqrt(gamma[0]);
  const double floor = 1e-8 * sd;
  const double var = gamma[0] - phi1 * gamma[1] - phi2 * gamma[2];
  return {phi1, phi2, std::max(std::sqrt(std::max(var, 0.0)), floor)};
}

/// H(k) = (e(k) - phi1 e(k-1) - phi2 e(k-2)) / sigma for k = 2..K-1; the
/// first two slices carry no innovations and are dropped.
inline InnovationField whiten(const AnomalyField& anomalies, const TemporalParams& params, std::size_t workers = 1) {
  const auto& d = anomalies.values;
  if (params.M != d.M() || params.N != d.N() || params.sites.size() != d.M() * d.N())
    throw validation_error("whiten: temporal parameter shape differs from anomaly field");
  if (d.K() < 3) throw validation_error("whiten: need at least 3 time steps");
  InnovationField out{anomalies.grid, Tensor4(d.M(), d.N(), d.K() - 2, d.R())};
  parallel_for(d.M() * d.N(), workers, [&](std::size_t site) {
    const std::size_t m = site / d.N(), n = site % d.N();
    const auto& p = params.sites[site];
    const double inv = 1.0 / p.sigma;
    for (std::size_t k = 2; k < d.K(); ++k)
      for (std::size_t r = 0; r < d.R(); ++r)
        out.values(m, n, k - 2, r) = (d(m, n, k, r) - p.phi1 * d(m, n, k - 1, r) - p.phi2 * d(m, n, k - 2, r)) * inv;
  });
  return out;
}

/// Runs e(k) = phi1 e(k-1) + phi2 e(k-2) + sigma H(k) from a zero start and
/// discards the first `burn_in` steps. Output has K_in - burn_in slices.
inline Tensor4 colorize(const Tensor4& innovations, const TemporalParams& params, std::size_t burn_in,
                        std::size_t workers = 1) {
  params.validate();
  if (params.M != innovations.M() || params.N != innovations.N())
    throw validation_error("colorize: temporal parameter shape differs from innovations");
  if (burn_in >= innovations.K()) throw validation_error("colorize: burn-in consumes every time step");
  const std::size_t K_out = innovations.K() - burn_in;
  Tensor4 out(innovations.M(), innovations.N(), K_out, innovations.R());
  parallel_for(innovations.M() * innovations.N(), workers, [&](std::size_t site) {
    const std::size_t m = site / innovations.N(), n = site % innovations.N();
    const auto& p = params.sites[site];
    for (std::size_t r = 0; r < innovations.R(); ++r) {
      double prev1 = 0.0, prev2 = 0.0;
      for (std::size_t k = 0; k < innovations.K(); ++k) {
        const double e = p.phi1 * prev1 + p.phi2 * prev2 + p.sigma * innovations(m, n, k, r);
        prev2 = prev1;
        prev1 = e;
        if (k >= burn_in) out(m, n, k - burn_in, r) = e;
      }
    }
  });
  return out;
}

}  // namespace evsp
