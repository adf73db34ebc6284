#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace evsp;

TEST(Diagnostics, PeriodogramOfZeroDataIsZero) {
  const auto p = tapered_periodogram(Eigen::MatrixXd::Zero(8, 5), Eigen::VectorXd::Ones(8));
  EXPECT_EQ(p.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(tapered_periodogram(Eigen::MatrixXd::Zero(8, 5), Eigen::VectorXd::Zero(8)), Error);
}

TEST(Diagnostics, WhiteNoisePeriodogramIsFlat) {
  const std::size_t N = 16, K = 4000;
  const double sd = 1.7;
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd x(N, K);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(gen);
  const auto p = tapered_periodogram(x, Eigen::VectorXd::Ones(N));
  for (std::size_t c = 0; c < N; ++c) {
    // Ordinates are scaled chi-square with 2 dof (1 at c = 0, N/2).
    const double dof = (c == 0 || c == N / 2) ? 1.0 : 2.0;
    const double se = sd * sd * std::sqrt(2.0 / dof / double(K));
    EXPECT_NEAR(p[c], sd * sd, 3.0 * se) << "c=" << c;
  }
}

TEST(Diagnostics, PureToneConcentratesAtItsWavenumber) {
  const std::size_t N = 12, c0 = 3;
  Eigen::MatrixXd x(N, 2);
  for (std::size_t n = 0; n < N; ++n) x(n, 0) = x(n, 1) = std::cos(2.0 * std::numbers::pi * c0 * n / N);
  const auto p = tapered_periodogram(x, Eigen::VectorXd::Ones(N));
  for (std::size_t c = 0; c < N; ++c) {
    if (c == c0 || c == N - c0) EXPECT_NEAR(p[c], N / 4.0, 1e-12);
    else EXPECT_NEAR(p[c], 0.0, 1e-12);
  }
}

TEST(Diagnostics, LandOceanPeriodogramDegenerateCases) {
  const std::size_t M = 2, N = 16, K = 20;
  SphereGrid grid = fixture::small_grid(M, N, K, 2);
  Tensor4 same(M, N, K, 2);
  const auto noise = fixture::random_tensor(M, N, K, 1, 4);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < K; ++k) same(m, n, k, 0) = same(m, n, k, 1) = noise(m, n, k, 0);
  auto mask = synthetic_mask(M, N, mask_pattern::HalfSplit{});
  for (const auto& band : landocean_periodograms(EnsembleField(grid, same), mask)) {
    EXPECT_EQ(band.land->cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(band.ocean->cwiseAbs().maxCoeff(), 0.0);
  }

  const auto t = fixture::random_tensor(M, N, K, 2, 5);
  const auto land = landocean_periodograms(EnsembleField(grid, t), synthetic_mask(M, N, mask_pattern::AllLand{}));
  Eigen::MatrixXd diff(N, K);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k) diff(n, k) = t(0, n, k, 0) - t(0, n, k, 1);
  ASSERT_TRUE(land[0].land.has_value());
  EXPECT_FALSE(land[0].ocean.has_value());
  EXPECT_LT((*land[0].land - tapered_periodogram(diff, Eigen::VectorXd::Ones(N))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Diagnostics, RegimeTaperStaysInsideItsRegime) {
  std::vector<std::uint8_t> row(24, 0);
  for (std::size_t n = 4; n < 14; ++n) row[n] = 1;
  const auto h = regime_taper(row, true, 4.0 * 2.0 * std::numbers::pi / 24.0);
  for (std::size_t n = 0; n < 24; ++n) {
    if (!row[n]) EXPECT_EQ(h[n], 0.0);
    EXPECT_GE(h[n], 0.0);
  }
  EXPECT_GT(h[9], 0.99);
}

TEST(Diagnostics, EmpiricalContrasts) {
  // Constant across space for each (k, r): every contrast vanishes.
  Tensor4 flat(3, 5, 4, 2);
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t n = 0; n < 5; ++n)
      for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t r = 0; r < 2; ++r) flat(m, n, k, r) = double(k) - 2.0 * double(r);
  const auto zero = contrast_variances({fixture::small_grid(3, 5, 6, 2), flat});
  EXPECT_EQ(zero.ew.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(zero.ns.bottomRows(2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(std::isnan(zero.ns(0, 0)));

  // iid unit innovations: E[(X - Y)^2] = 2.
  const std::size_t K = 2500, R = 4;
  const auto iid = contrast_variances({fixture::small_grid(2, 3, K + 2, R), fixture::random_tensor(2, 3, K, R, 6)});
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_NEAR(iid.ew(1, n), 2.0, 3.0 * iid.ew_se(1, n));
    EXPECT_NEAR(iid.ns(1, n), 2.0, 3.0 * iid.ns_se(1, n));
    EXPECT_NEAR(iid.ew_se(1, n), std::sqrt(8.0 / double(K * R)), 0.01);
  }

  const auto single = contrast_variances({fixture::small_grid(1, 4, 5, 2), fixture::random_tensor(1, 4, 3, 2, 1)});
  EXPECT_TRUE(std::isnan(single.ns_lat[0]));
  EXPECT_FALSE(std::isnan(single.ew_lat[0]));
}

TEST(Diagnostics, ModelImpliedContrasts) {
  SyntheticSpec spec;
  spec.M = 3, spec.N = 16, spec.K = 10, spec.R = 2, spec.land_width = 6;
  auto model = synthetic_truth(spec).model;
  model.variant = Variant::ax;
  for (auto& b : model.bands) b.ocean = b.land;
  const auto ax = model_implied_contrasts(model);
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t n = 1; n < 16; ++n) EXPECT_NEAR(ax.ew(m, n), ax.ew(m, 0), 1e-12);

  auto ev = synthetic_truth(spec).model;
  ev.coherence.global = {0.0, 0.0};
  const auto indep = model_implied_contrasts(ev);
  const auto transfers = model_transfers(ev);
  for (std::size_t m = 1; m < 3; ++m)
    for (std::size_t n = 0; n < 16; ++n) {
      const double expected = band_covariance(transfers[m])(n, n) + band_covariance(transfers[m - 1])(n, n);
      EXPECT_NEAR(indep.ns(m, n), expected, 1e-12);
    }
  // Land and ocean have different ew contrasts under the evolutionary model.
  const auto evc = model_implied_contrasts(synthetic_truth(spec).model);
  EXPECT_GT(std::abs(evc.ew(0, 6) - evc.ew(0, 14)), 1e-3);
}
