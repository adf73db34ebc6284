#pragma once

// Longitudinal structure of a latitude band: Matern-like circular spectra for
// the land and ocean regimes, the smooth land weight b(n) that mixes them, and
// the within-band covariance implied by the resulting evolutionary spectrum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace evsp {

struct MaternSpectrumParams {
  double phi = 1.0;
  double alpha = 1.0;
  double nu = 1.0;

  void validate() const {
    if (!(phi > 0.0 && alpha > 0.0 && nu > 0.0) || !std::isfinite(phi) || !std::isfinite(alpha) || !std::isfinite(nu))
      throw validation_error("Matern spectrum: phi, alpha and nu must be positive and finite");
  }
  friend bool operator==(const MaternSpectrumParams&, const MaternSpectrumParams&) = default;
};

struct TaperParams {
  int g = 0;
  double gamma = 0.0;

  void validate(std::size_t N) const {
    if (2 * static_cast<std::size_t>(std::abs(g)) >= N) throw validation_error("taper: |g| must be below N/2");
    if (!(gamma >= 0.0 && gamma < 2.0 * std::numbers::pi)) throw validation_error("taper: gamma outside [0, 2pi)");
  }
  friend bool operator==(const TaperParams&, const TaperParams&) = default;
};

struct BandSpectralParams {
  MaternSpectrumParams land;
  MaternSpectrumParams ocean;
  TaperParams taper;

  void validate(std::size_t N) const {
    land.validate();
    ocean.validate();
    taper.validate(N);
  }
  bool axially_symmetric() const { return land == ocean; }
  friend bool operator==(const BandSpectralParams&, const BandSpectralParams&) = default;
};

/// F(n, c): transfer function at longitude n and wavenumber c, both 0..N-1.
struct TransferFunction {
  Eigen::MatrixXd values;
  std::size_t N() const { return static_cast<std::size_t>(values.rows()); }
};

inline double sin2_term(std::size_t c, std::size_t N) {
  const double s = std::sin(std::numbers::pi * static_cast<double>(c) / static_cast<double>(N));
  return 4.0 * s * s;
}

/// |f(c)|^2 = phi / (alpha^2 + 4 sin^2(c pi / N))^(nu + 1/2).
inline double matern_like_spectrum(std::size_t c, const MaternSpectrumParams& p, std::size_t N) {
  return p.phi / std::pow(p.alpha * p.alpha + sin2_term(c, N), p.nu + 0.5);
}

/// Tukey (tapered cosine) window on a circle of circumference 2 pi: cosine
/// rise over [0, gamma/2], plateau of 1, cosine fall over [2 pi - gamma/2, 2 pi).
inline double tukey_window(double offset, double gamma) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (!(gamma >= 0.0 && gamma < two_pi)) throw validation_error("tukey window: gamma outside [0, 2pi)");
  if (gamma == 0.0) return 1.0;
  offset = std::fmod(offset, two_pi);
  if (offset < 0.0) offset += two_pi;
  const double half = gamma / 2.0;
  if (offset < half) return 0.5 * (1.0 + std::cos(two_pi / gamma * (offset - half)));
  if (offset <= two_pi - half) return 1.0;
  return 0.5 * (1.0 + std::cos(two_pi / gamma * (offset - two_pi + half)));
}

/// Unit-sum circular smoothing kernel indexed by lag d = 0..N-1.
///
/// The weight at lag d is 1 - tukey_window(d * 2pi/N, gamma): a raised-cosine
/// bump of total width gamma centred on zero lag, i.e. the part of the circle
/// the Tukey plateau excludes. gamma <= 2 * spacing leaves a delta.
inline std::vector<double> smoothing_kernel(std::size_t N, double gamma) {
  std::vector<double> w(N, 0.0);
  double total = 0.0;
  for (std::size_t d = 0; d < N; ++d) {
    w[d] = 1.0 - tukey_window(2.0 * std::numbers::pi * static_cast<double>(d) / static_cast<double>(N), gamma);
    if (w[d] < 1e-15) w[d] = 0.0;
    total += w[d];
  }
  if (total <= 0.0) {
    std::fill(w.begin(), w.end(), 0.0);
    w[0] = 1.0;
    return w;
  }
  for (auto& x : w) x /= total;
  return w;
}

/// Land indicator grown by g points past every land/ocean transition (g > 0)
/// or shrunk by |g| points (g < 0). Longitude wraps.
inline std::vector<std::uint8_t> modified_indicator(const std::vector<std::uint8_t>& row, int g) {
  const std::size_t N = row.size();
  if (g == 0 || N == 0) return row;
  const std::size_t reach = static_cast<std::size_t>(std::abs(g));
  std::vector<std::uint8_t> out(N, 0);
  for (std::size_t n = 0; n < N; ++n) {
    bool any = false;
    bool all = true;
    for (std::size_t d = 0; d <= 2 * reach; ++d) {
      const bool land = row[(n + N * (reach + 1) + d - reach) % N] != 0;
      any = any || land;
      all = all && land;
    }
    out[n] = (g > 0 ? any : all) ? 1 : 0;
  }
  return out;
}

inline std::vector<double> circular_convolve(const std::vector<double>& x, const std::vector<double>& kernel) {
  const std::size_t N = x.size();
  std::vector<double> out(N, 0.0);
  for (std::size_t d = 0; d < N; ++d) {
    if (kernel[d] == 0.0) continue;
    for (std::size_t n = 0; n < N; ++n) out[(n + d) % N] += kernel[d] * x[n];
  }
  return out;
}

/// Smooth land weight b(n) in [0, 1]: the modified indicator convolved with
/// the unit-sum smoothing kernel. `land_vanished` is set when erosion removes
/// every land point of a row that had some.
inline std::vector<double> land_modulation(const std::vector<std::uint8_t>& row, const TaperParams& taper,
                                           bool* land_vanished = nullptr) {
  const std::size_t N = row.size();
  taper.validate(N);
  const auto modified = modified_indicator(row, taper.g);
  std::vector<double> indicator(modified.begin(), modified.end());
  if (land_vanished) {
    bool had = false, has = false;
    for (std::size_t n = 0; n < N; ++n) {
      had = had || row[n] != 0;
      has = has || modified[n] != 0;
    }
    *land_vanished = had && !has;
  }
  auto b = circular_convolve(indicator, smoothing_kernel(N, taper.gamma));
  for (auto& v : b) v = std::clamp(v, 0.0, 1.0);
  return b;
}

/// F(n, c) = b(n) f_land(c) + (1 - b(n)) f_ocean(c), taking each component
/// f as the positive square root of its Matern-like spectrum.
inline TransferFunction evolutionary_transfer(const BandSpectralParams& params, const std::vector<std::uint8_t>& mask_row,
                                              std::size_t N, bool* land_vanished = nullptr) {
  if (mask_row.size() != N) throw validation_error("transfer: mask row length differs from N");
  params.validate(N);
  TransferFunction F{Eigen::MatrixXd(N, N)};
  Eigen::VectorXd land(N), ocean(N);
  for (std::size_t c = 0; c < N; ++c) {
    land[c] = std::sqrt(matern_like_spectrum(c, params.land, N));
    ocean[c] = std::sqrt(matern_like_spectrum(c, params.ocean, N));
  }
  if (params.axially_symmetric()) {
    if (land_vanished) *land_vanished = false;
    F.values = Eigen::VectorXd::Ones(N) * land.transpose();
    return F;
  }
  const auto b = land_modulation(mask_row, params.taper, land_vanished);
  for (std::size_t n = 0; n < N; ++n) F.values.row(n) = (b[n] * land + (1.0 - b[n]) * ocean).transpose();
  return F;
}

/// Real trigonometric basis on N equally spaced longitudes.
///
/// Column j holds cos(c l_n) or sin(c l_n) for wavenumber c = wavenumber[j];
/// wavenumbers c and N - c coincide on the grid, so each 0 < c < N/2 appears
/// once as a cosine and once as a sine with weight 2, and c = 0 (and c = N/2
/// for even N) appear once with weight 1. Sum_j weight_j basis_j(n) basis_j(n')
/// F(n, c_j) F(n', c_j) reproduces the full 0..N-1 cosine sum.
struct TrigBasis {
  std::vector<std::size_t> wavenumber;
  Eigen::MatrixXd values;
  Eigen::VectorXd weight;

  explicit TrigBasis(std::size_t N) : values(N, N), weight(N) {
    wavenumber.reserve(N);
    std::size_t j = 0;
    auto add = [&](std::size_t c, bool sine, double w) {
      wavenumber.push_back(c);
      for (std::size_t n = 0; n < N; ++n) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(c * n % N) / static_cast<double>(N);
        values(n, j) = sine ? std::sin(angle) : std::cos(angle);
      }
      weight[j] = w;
      ++j;
    };
    add(0, false, 1.0);
    for (std::size_t c = 1; 2 * c < N; ++c) {
      add(c, false, 2.0);
      add(c, true, 2.0);
    }
    if (N % 2 == 0) add(N / 2, false, 1.0);
  }
  std::size_t size() const { return wavenumber.size(); }
};

/// Loading matrix L with L(n, j) = sqrt(w_j) F(n, c_j) basis_j(n), so that the
/// band covariance is L L^T and H = L z for independent unit-variance z.
inline Eigen::MatrixXd latent_loading(const TransferFunction& F, const TrigBasis& basis) {
  const std::size_t N = F.N();
  Eigen::MatrixXd L(N, N);
  for (std::size_t j = 0; j < N; ++j) {
    const double s = std::sqrt(basis.weight[j]);
    L.col(j) = s * F.values.col(basis.wavenumber[j]).cwiseProduct(basis.values.col(j));
  }
  return L;
}

/// C(n, n') = sum_c F(n, c) F(n', c) cos(c (l_n - l_n')).
inline Eigen::MatrixXd band_covariance(const TransferFunction& F) {
  const std::size_t N = F.N();
  Eigen::MatrixXd cos_part(N, N), sin_part(N, N);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < N; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c * n % N) / static_cast<double>(N);
      cos_part(n, c) = F.values(n, c) * std::cos(angle);
      sin_part(n, c) = F.values(n, c) * std::sin(angle);
    }
  Eigen::MatrixXd C = cos_part * cos_part.transpose() + sin_part * sin_part.transpose();
  return 0.5 * (C + C.transpose());
}

}  // namespace evsp
