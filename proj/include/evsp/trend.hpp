#pragma once

// Per-site smooth trend of the ensemble mean, and its optional storage as a
// reduced set of knots.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "grid.hpp"

namespace evsp {

struct TrendField {
  Tensor3 values;
  double lambda = 0.01;
};

/// Minimizes lambda sum_k (x_k - y_k)^2 + (1 - lambda) sum_k (y_{k-1} - 2 y_k + y_{k+1})^2
/// at every site. Solved as a stacked least-squares problem, which stays well
/// conditioned as lambda -> 0 where the solution tends to the straight-line fit.
inline TrendField fit_trend(const Tensor3& mean, double lambda = 0.01) {
  const std::size_t K = mean.K();
  if (K < 4) throw validation_error("fit_trend: need at least 4 time steps");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw validation_error("fit_trend: lambda outside (0, 1]");
  const Eigen::Index k = static_cast<Eigen::Index>(K);
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(2 * k - 2, k);
  const double fit_w = std::sqrt(lambda), rough_w = std::sqrt(1.0 - lambda);
  for (Eigen::Index i = 0; i < k; ++i) design(i, i) = fit_w;
  for (Eigen::Index i = 0; i + 2 < k; ++i) {
    design(k + i, i) = rough_w;
    design(k + i, i + 1) = -2.0 * rough_w;
    design(k + i, i + 2) = rough_w;
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  TrendField out{Tensor3(mean.M(), mean.N(), K), lambda};
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * k - 2);
  for (std::size_t m = 0; m < mean.M(); ++m)
    for (std::size_t n = 0; n < mean.N(); ++n) {
      for (Eigen::Index i = 0; i < k; ++i) rhs[i] = fit_w * mean(m, n, static_cast<std::size_t>(i));
      const Eigen::VectorXd y = lambda == 1.0 ? Eigen::VectorXd(rhs.head(k) / fit_w) : Eigen::VectorXd(qr.solve(rhs));
      for (Eigen::Index i = 0; i < k; ++i) out.values(m, n, static_cast<std::size_t>(i)) = y[i];
    }
  return out;
}

enum class TrendPolicy { store_full, store_spline_knots };

struct TrendStorage {
  TrendPolicy policy = TrendPolicy::store_full;
  std::size_t knots = 8;

  std::size_t stored_values(std::size_t M, std::size_t N, std::size_t K) const {
    return policy == TrendPolicy::store_full ? M * N * K : M * N * std::min(knots, K);
  }
};

inline std::string to_string(TrendPolicy p) { return p == TrendPolicy::store_full ? "store-full" : "store-spline-knots"; }

/// Accepts "store-full", "store-spline-knots" or "store-spline-knots:<count>".
inline TrendStorage parse_trend_storage(const std::string& s) {
  if (s == "store-full" || s == "full") return {TrendPolicy::store_full, 0};
  const std::string prefix = "store-spline-knots";
  if (s.rfind(prefix, 0) == 0) {
    TrendStorage t{TrendPolicy::store_spline_knots, 8};
    if (s.size() > prefix.size()) {
      if (s[prefix.size()] != ':') throw validation_error("unknown trend policy '" + s + "'");
      t.knots = std::stoul(s.substr(prefix.size() + 1));
    }
    if (t.knots < 2) throw validation_error("trend policy: need at least 2 knots");
    return t;
  }
  throw validation_error("unknown trend policy '" + s + "'");
}

inline std::vector<std::size_t> knot_positions(std::size_t K, std::size_t count) {
  count = std::min(count, K);
  std::vector<std::size_t> pos(count);
  for (std::size_t i = 0; i < count; ++i)
    pos[i] = static_cast<std::size_t>(std::llround(static_cast<double>(i) * static_cast<double>(K - 1) / static_cast<double>(count - 1)));
  return pos;
}

/// Natural cubic spline through (x_i, y_i), evaluated at 0..K-1.
inline std::vector<double> natural_spline(const std::vector<std::size_t>& x, const std::vector<double>& y, std::size_t K) {
  const std::size_t q = x.size();
  std::vector<double> second(q, 0.0);
  if (q > 2) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q - 2), static_cast<Eigen::Index>(q - 2));
    Eigen::VectorXd b(static_cast<Eigen::Index>(q - 2));
    for (std::size_t i = 1; i + 1 < q; ++i) {
      const double h0 = static_cast<double>(x[i] - x[i - 1]), h1 = static_cast<double>(x[i + 1] - x[i]);
      const auto row = static_cast<Eigen::Index>(i - 1);
      A(row, row) = (h0 + h1) / 3.0;
      if (i > 1) A(row, row - 1) = h0 / 6.0;
      if (i + 2 < q) A(row, row + 1) = h1 / 6.0;
      b[row] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    const Eigen::VectorXd s = A.ldlt().solve(b);
    for (std::size_t i = 1; i + 1 < q; ++i) second[i] = s[static_cast<Eigen::Index>(i - 1)];
  }
  std::vector<double> out(K);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < K; ++k) {
    while (seg + 2 < q && k > x[seg + 1]) ++seg;
    const double h = static_cast<double>(x[seg + 1] - x[seg]);
    const double a = static_cast<double>(x[seg + 1]) - static_cast<double>(k), b = static_cast<double>(k) - static_cast<double>(x[seg]);
    out[k] = (second[seg] * a * a * a + second[seg + 1] * b * b * b) / (6.0 * h) +
             (y[seg] / h - second[seg] * h / 6.0) * a + (y[seg + 1] / h - second[seg + 1] * h / 6.0) * b;
  }
  return out;
}

/// Trend as it would be reconstructed from storage under `storage`.
inline TrendField apply_trend_storage(const TrendField& trend, const TrendStorage& storage) {
  if (storage.policy == TrendPolicy::store_full) return trend;
  const std::size_t K = trend.values.K();
  const auto pos = knot_positions(K, storage.knots);
  TrendField out{Tensor3(trend.values.M(), trend.values.N(), K), trend.lambda};
  std::vector<double> y(pos.size());
  for (std::size_t m = 0; m < trend.values.M(); ++m)
    for (std::size_t n = 0; n < trend.values.N(); ++n) {
      for (std::size_t i = 0; i < pos.size(); ++i) y[i] = trend.values(m, n, pos[i]);
      const auto curve = natural_spline(pos, y, K);
      for (std::size_t k = 0; k < K; ++k) out.values(m, n, k) = curve[k];
    }
  return out;
}

}  // namespace evsp
