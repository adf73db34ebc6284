#pragma once

// Goodness-of-fit diagnostics: tapered land/ocean periodograms and
// east-west / north-south contrast variances, empirical and model-implied.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "coherence.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "spectral.hpp"
#include "temporal.hpp"

namespace evsp {

/// Time-averaged periodogram of tapered band data x (N x K):
///   (1/K) sum_k (p/N) |sum_n h_n x_nk e^{-i l_n c}|^2,  p = N / sum_n h_n^2.
inline Eigen::VectorXd tapered_periodogram(const Eigen::MatrixXd& x, const Eigen::VectorXd& taper) {
  const Eigen::Index N = x.rows(), K = x.cols();
  if (taper.size() != N) throw validation_error("periodogram: taper length differs from N");
  if ((taper.array() < 0.0).any()) throw validation_error("periodogram: taper must be nonnegative");
  const double energy = taper.squaredNorm();
  if (!(energy > 0.0)) throw validation_error("periodogram: all-zero taper");
  const double scale = 1.0 / energy / static_cast<double>(K);  // (p / N) / K
  Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
  const Eigen::MatrixXd tapered = taper.asDiagonal() * x;
  for (Eigen::Index c = 0; c < N; ++c) {
    Eigen::VectorXd re = Eigen::VectorXd::Zero(K), im = Eigen::VectorXd::Zero(K);
    for (Eigen::Index n = 0; n < N; ++n) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((c * n) % N) / static_cast<double>(N);
      re += std::cos(angle) * tapered.row(n).transpose();
      im -= std::sin(angle) * tapered.row(n).transpose();
    }
    out[c] = scale * (re.squaredNorm() + im.squaredNorm());
  }
  return out;
}

/// Smooth taper supported inside one regime of a mask row: the regime is
/// eroded by the kernel radius and then smoothed, so the result vanishes on
/// the other regime. Thin regions that vanish under erosion fall back to the
/// smoothed indicator restricted to the regime.
inline Eigen::VectorXd regime_taper(const std::vector<std::uint8_t>& mask_row, bool land, double gamma) {
  const std::size_t N = mask_row.size();
  std::vector<std::uint8_t> regime(N);
  for (std::size_t n = 0; n < N; ++n) regime[n] = (mask_row[n] != 0) == land ? 1 : 0;
  const auto kernel = smoothing_kernel(N, gamma);
  int radius = 0;
  for (std::size_t d = 1; d <= N / 2; ++d)
    if (kernel[d] > 0.0) radius = static_cast<int>(d);
  radius = std::min(radius, static_cast<int>((N - 1) / 2));
  auto core = modified_indicator(regime, -radius);
  bool any = false;
  for (auto v : core) any = any || v;
  std::vector<double> base(N);
  for (std::size_t n = 0; n < N; ++n) base[n] = any ? core[n] : regime[n];
  auto smooth = circular_convolve(base, kernel);
  Eigen::VectorXd h(N);
  for (std::size_t n = 0; n < N; ++n) h[static_cast<Eigen::Index>(n)] = regime[n] ? std::max(smooth[n], 0.0) : 0.0;
  return h;
}

struct RegimePeriodograms {
  std::optional<Eigen::VectorXd> land;   // absent for an all-ocean band
  std::optional<Eigen::VectorXd> ocean;  // absent for an all-land band
};

/// Land and ocean periodograms of (T_1 - T_2) / s per band. `sds` is an
/// optional M x N array of per-site normalizing standard deviations.
inline std::vector<RegimePeriodograms> landocean_periodograms(const EnsembleField& field, const LandMask& mask,
                                                              const std::optional<Eigen::MatrixXd>& sds = std::nullopt,
                                                              std::optional<double> gamma = std::nullopt,
                                                              std::size_t workers = 1) {
  const auto& g = field.grid;
  if (g.R < 2) throw validation_error("periodograms: need two realizations");
  if (mask.M() != g.M || mask.N() != g.N) throw validation_error("periodograms: mask shape differs from grid");
  if (sds && (sds->rows() != static_cast<Eigen::Index>(g.M) || sds->cols() != static_cast<Eigen::Index>(g.N)))
    throw validation_error("periodograms: sd grid shape differs from field");
  const double width = gamma.value_or(4.0 * g.spacing());
  std::vector<RegimePeriodograms> out(g.M);
  parallel_for(g.M, workers, [&](std::size_t m) {
    Eigen::MatrixXd x(g.N, g.K);
    for (std::size_t n = 0; n < g.N; ++n) {
      const double s = sds ? (*sds)(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) : 1.0;
      for (std::size_t k = 0; k < g.K; ++k)
        x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = (field.values(m, n, k, 0) - field.values(m, n, k, 1)) / s;
    }
    const auto row = mask.row(m);
    bool any_land = false, any_ocean = false;
    for (auto v : row) (v ? any_land : any_ocean) = true;
    if (any_land) out[m].land = tapered_periodogram(x, regime_taper(row, true, width));
    if (any_ocean) out[m].ocean = tapered_periodogram(x, regime_taper(row, false, width));
  });
  return out;
}

/// Contrast variances. Row 0 of the north-south arrays is undefined (NaN).
struct ContrastReport {
  Eigen::MatrixXd ew, ns;        // M x N
  Eigen::MatrixXd ew_se, ns_se;  // Monte Carlo standard errors (empirical only)
  Eigen::VectorXd ew_lat, ns_lat;  // mean over n, per band
  Eigen::VectorXd ew_lon, ns_lon;  // mean over bands, per longitude (ns over m >= 1)

  void finalize_means() {
    const Eigen::Index M = ew.rows(), N = ew.cols();
    ew_lat = ew.rowwise().mean();
    ew_lon = ew.colwise().mean().transpose();
    ns_lat = Eigen::VectorXd::Constant(M, std::numeric_limits<double>::quiet_NaN());
    ns_lon = Eigen::VectorXd::Constant(N, std::numeric_limits<double>::quiet_NaN());
    if (M > 1) {
      ns_lat.tail(M - 1) = ns.bottomRows(M - 1).rowwise().mean();
      ns_lon = ns.bottomRows(M - 1).colwise().mean().transpose();
    }
  }
};

/// Empirical contrasts of innovations. `divisor` defaults to K R as in the
/// plain average; pass K (R - 1) for innovations computed from anomalies.
inline ContrastReport contrast_variances(const InnovationField& h, std::optional<double> divisor = std::nullopt) {
  const auto& v = h.values;
  const std::size_t M = v.M(), N = v.N(), K = v.K(), R = v.R();
  const double count = static_cast<double>(K * R);
  const double denom = divisor.value_or(count);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ContrastReport rep;
  rep.ew = rep.ew_se = Eigen::MatrixXd::Zero(M, N);
  rep.ns = rep.ns_se = Eigen::MatrixXd::Constant(M, N, nan);
  auto accumulate = [&](auto&& diff, double& mean_out, double& se_out) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t r = 0; r < R; ++r) {
        const double d = diff(k, r);
        s += d * d;
        s2 += d * d * d * d;
      }
    mean_out = s / denom;
    const double mu = s / count;
    const double var = count > 1 ? std::max(s2 / count - mu * mu, 0.0) * count / (count - 1.0) : 0.0;
    se_out = std::sqrt(var * count) / denom;
  };
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t west = (n + N - 1) % N;
      accumulate([&](std::size_t k, std::size_t r) { return v(m, n, k, r) - v(m, west, k, r); }, rep.ew(m, n), rep.ew_se(m, n));
      if (m > 0)
        accumulate([&](std::size_t k, std::size_t r) { return v(m, n, k, r) - v(m - 1, n, k, r); }, rep.ns(m, n), rep.ns_se(m, n));
    }
  rep.finalize_means();
  return rep;
}

/// Expected contrasts under a fitted model's spatial covariance.
inline ContrastReport model_implied_contrasts(const FittedModel& model) {
  const std::size_t M = model.grid.M, N = model.grid.N;
  const auto transfers = model_transfers(model);
  std::vector<Eigen::MatrixXd> cov(M);
  for (std::size_t m = 0; m < M; ++m) cov[m] = band_covariance(transfers[m]);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ContrastReport rep;
  rep.ew = Eigen::MatrixXd::Zero(M, N);
  rep.ns = Eigen::MatrixXd::Constant(M, N, nan);
  rep.ew_se = Eigen::MatrixXd::Zero(M, N);
  rep.ns_se = Eigen::MatrixXd::Constant(M, N, nan);
  const LatitudeCoherenceProfile independent{};
  const auto& profile = model.variant == Variant::ind ? independent : model.coherence;
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t west = (n + N - 1) % N;
      const auto& C = cov[m];
      rep.ew(m, n) = C(n, n) + C(west, west) - 2.0 * C(n, west);
      if (m > 0) {
        double cross = 0.0;
        for (std::size_t c = 0; c < N; ++c)
          cross += transfers[m].values(n, c) * transfers[m - 1].values(n, c) * cross_band_correlation(profile, m, m - 1, c, N);
        rep.ns(m, n) = C(n, n) + cov[m - 1](n, n) - 2.0 * cross;
      }
    }
  rep.finalize_means();
  return rep;
}

}  // namespace evsp
