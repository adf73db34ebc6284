#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace evsp {

/// Regular latitude/longitude/time grid with R realizations.
///
/// Latitudes are stored south to north in radians; longitudes are implicit and
/// equally spaced, l_n = 2 pi n / N for n = 0..N-1.
struct SphereGrid {
  std::size_t M = 0;
  std::size_t N = 0;
  std::size_t K = 0;
  std::size_t R = 0;
  std::vector<double> latitudes;

  double longitude(std::size_t n) const { return 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(N); }
  double spacing() const { return 2.0 * std::numbers::pi / static_cast<double>(N); }
  std::size_t sites() const { return M * N; }

  /// Structural checks shared by every tensor. Fitting imposes the stronger
  /// K >= 3, R >= 2 requirements at the point of use.
  void validate() const {
    if (N < 2) throw validation_error("grid: N must be at least 2");
    if (M < 1) throw validation_error("grid: M must be at least 1");
    if (K < 1 || R < 1) throw validation_error("grid: K and R must be positive");
    if (latitudes.size() != M) throw validation_error("grid: latitude list length differs from M");
    for (std::size_t m = 0; m < M; ++m) {
      const double lat = latitudes[m];
      if (!std::isfinite(lat) || lat <= -std::numbers::pi / 2 || lat >= std::numbers::pi / 2)
        throw validation_error("grid: latitude " + std::to_string(m) + " outside (-pi/2, pi/2)");
      if (m > 0 && lat <= latitudes[m - 1]) throw validation_error("grid: latitudes must be strictly increasing");
    }
  }

  /// Evenly spaced band centres from south_deg to north_deg inclusive.
  static std::vector<double> even_latitudes(std::size_t M, double south_deg, double north_deg) {
    std::vector<double> lat(M);
    for (std::size_t m = 0; m < M; ++m) {
      const double t = M == 1 ? 0.5 : static_cast<double>(m) / static_cast<double>(M - 1);
      lat[m] = (south_deg + t * (north_deg - south_deg)) * std::numbers::pi / 180.0;
    }
    return lat;
  }
};

/// Dense (m, n, k, r) array with r varying fastest.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t M, std::size_t N, std::size_t K, std::size_t R, double fill = 0.0)
      : M_(M), N_(N), K_(K), R_(R), data_(M * N * K * R, fill) {}

  std::size_t M() const { return M_; }
  std::size_t N() const { return N_; }
  std::size_t K() const { return K_; }
  std::size_t R() const { return R_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(std::size_t m, std::size_t n, std::size_t k, std::size_t r) const {
    return ((m * N_ + n) * K_ + k) * R_ + r;
  }
  double& operator()(std::size_t m, std::size_t n, std::size_t k, std::size_t r) { return data_[index(m, n, k, r)]; }
  double operator()(std::size_t m, std::size_t n, std::size_t k, std::size_t r) const { return data_[index(m, n, k, r)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor4& o) const { return M_ == o.M_ && N_ == o.N_ && K_ == o.K_ && R_ == o.R_; }

 private:
  std::size_t M_ = 0, N_ = 0, K_ = 0, R_ = 0;
  std::vector<double> data_;
};

/// Dense (m, n, k) array with k fastest.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t M, std::size_t N, std::size_t K, double fill = 0.0) : M_(M), N_(N), K_(K), data_(M * N * K, fill) {}

  std::size_t M() const { return M_; }
  std::size_t N() const { return N_; }
  std::size_t K() const { return K_; }
  double& operator()(std::size_t m, std::size_t n, std::size_t k) { return data_[(m * N_ + n) * K_ + k]; }
  double operator()(std::size_t m, std::size_t n, std::size_t k) const { return data_[(m * N_ + n) * K_ + k]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t M_ = 0, N_ = 0, K_ = 0;
  std::vector<double> data_;
};

struct EnsembleField {
  SphereGrid grid;
  Tensor4 values;

  EnsembleField() = default;
  EnsembleField(SphereGrid g, Tensor4 v) : grid(std::move(g)), values(std::move(v)) { validate(); }

  void validate() const {
    grid.validate();
    if (values.M() != grid.M || values.N() != grid.N || values.K() != grid.K || values.R() != grid.R)
      throw validation_error("ensemble field: tensor shape differs from grid");
    for (double v : values.data())
      if (!std::isfinite(v)) throw validation_error("ensemble field: non-finite value");
  }
};

/// Realization anomalies D_r = T_r - mean_r(T_r).
struct AnomalyField {
  SphereGrid grid;
  Tensor4 values;
};

/// Binary land indicator, row-major M x N; 1 = land.
class LandMask {
 public:
  LandMask() = default;
  LandMask(std::size_t M, std::size_t N, std::vector<std::uint8_t> cells) : M_(M), N_(N), cells_(std::move(cells)) {
    if (cells_.size() != M * N) throw validation_error("land mask: cell count differs from M*N");
    for (auto c : cells_)
      if (c > 1) throw validation_error("land mask: entries must be 0 or 1");
  }

  std::size_t M() const { return M_; }
  std::size_t N() const { return N_; }
  std::uint8_t operator()(std::size_t m, std::size_t n) const { return cells_[m * N_ + n]; }
  std::vector<std::uint8_t> row(std::size_t m) const {
    return {cells_.begin() + static_cast<std::ptrdiff_t>(m * N_), cells_.begin() + static_cast<std::ptrdiff_t>((m + 1) * N_)};
  }
  const std::vector<std::uint8_t>& cells() const { return cells_; }

 private:
  std::size_t M_ = 0, N_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Pointwise mean over realizations; also the GLS estimate of the mean.
inline Tensor3 ensemble_mean(const EnsembleField& field) {
  const auto& v = field.values;
  Tensor3 mean(v.M(), v.N(), v.K());
  const double inv_r = 1.0 / static_cast<double>(v.R());
  for (std::size_t m = 0; m < v.M(); ++m)
    for (std::size_t n = 0; n < v.N(); ++n)
      for (std::size_t k = 0; k < v.K(); ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < v.R(); ++r) s += v(m, n, k, r);
        mean(m, n, k) = s * inv_r;
      }
  return mean;
}

inline AnomalyField anomalies(const EnsembleField& field) {
  if (field.grid.R < 2) throw validation_error("anomalies undefined for single realization");
  const Tensor3 mean = ensemble_mean(field);
  AnomalyField out{field.grid, field.values};
  auto& v = out.values;
  for (std::size_t m = 0; m < v.M(); ++m)
    for (std::size_t n = 0; n < v.N(); ++n)
      for (std::size_t k = 0; k < v.K(); ++k)
        for (std::size_t r = 0; r < v.R(); ++r) v(m, n, k, r) -= mean(m, n, k);
  return out;
}

namespace mask_pattern {
struct AllLand {};
struct AllOcean {};
/// First floor(N/2) longitudes land, remainder ocean.
struct HalfSplit {};
/// Half-open [begin, end) longitude intervals of land per band; begin > end
/// wraps around the circle. A single row of intervals applies to every band.
struct Blocks {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> intervals;
};
struct Random {
  double p = 0.5;
  std::uint64_t seed = 0;
};
}  // namespace mask_pattern

using MaskPattern = std::variant<mask_pattern::AllLand, mask_pattern::AllOcean, mask_pattern::HalfSplit,
                                 mask_pattern::Blocks, mask_pattern::Random>;

inline LandMask synthetic_mask(std::size_t M, std::size_t N, const MaskPattern& pattern) {
  std::vector<std::uint8_t> cells(M * N, 0);
  if (std::holds_alternative<mask_pattern::AllLand>(pattern)) {
    std::fill(cells.begin(), cells.end(), 1);
  } else if (std::holds_alternative<mask_pattern::HalfSplit>(pattern)) {
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N / 2; ++n) cells[m * N + n] = 1;
  } else if (const auto* blocks = std::get_if<mask_pattern::Blocks>(&pattern)) {
    const auto& rows = blocks->intervals;
    if (rows.size() != M && rows.size() != 1)
      throw validation_error("mask blocks: need one interval list per band or a single shared list");
    for (std::size_t m = 0; m < M; ++m) {
      for (const auto& [begin, end] : rows.size() == 1 ? rows[0] : rows[m]) {
        if (begin >= N || end > N || begin == end)
          throw validation_error("mask blocks: malformed interval [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
        for (std::size_t n = begin; n != end; n = (n + 1) % N) {
          cells[m * N + n] = 1;
          if (end == N && n == N - 1) break;
        }
      }
    }
  } else if (const auto* random = std::get_if<mask_pattern::Random>(&pattern)) {
    if (!(random->p >= 0.0 && random->p <= 1.0)) throw validation_error("mask random: p outside [0, 1]");
    Stream stream(random->seed, 0x6d61736bULL);
    for (auto& c : cells) c = stream.uniform() < random->p ? 1 : 0;
  }
  return LandMask(M, N, std::move(cells));
}

}  // namespace evsp
