#include <gtest/gtest.h>

#include "support.hpp"

using namespace evsp;

TEST(Grid, EnsembleMeanOfSingleRealizationIsTheField) {
  const auto t = fixture::random_tensor(2, 3, 4, 1, 7);
  const EnsembleField f(fixture::small_grid(2, 3, 4, 1), t);
  const auto mean = ensemble_mean(f);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(mean(m, n, k), t(m, n, k, 0));
}

TEST(Grid, EnsembleMeanOfOpposedRealizationsIsZero) {
  Tensor4 t(1, 2, 3, 2);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t k = 0; k < 3; ++k) t(0, n, k, 0) = 1.5, t(0, n, k, 1) = -1.5;
  const auto mean = ensemble_mean(EnsembleField(fixture::small_grid(1, 2, 3, 2), t));
  for (double v : mean.data()) EXPECT_EQ(v, 0.0);
}

TEST(Grid, MeanAndAnomaliesAtOneSite) {
  Tensor4 t(1, 2, 1, 3);
  t(0, 0, 0, 0) = 1.0, t(0, 0, 0, 1) = 2.0, t(0, 0, 0, 2) = 6.0;
  const EnsembleField f(fixture::small_grid(1, 2, 1, 3), t);
  EXPECT_DOUBLE_EQ(ensemble_mean(f)(0, 0, 0), 3.0);
  const auto a = anomalies(f);
  EXPECT_DOUBLE_EQ(a.values(0, 0, 0, 0), -2.0);
  EXPECT_DOUBLE_EQ(a.values(0, 0, 0, 1), -1.0);
  EXPECT_DOUBLE_EQ(a.values(0, 0, 0, 2), 3.0);
}

TEST(Grid, AnomaliesSumToZeroAndVanishForIdenticalRuns) {
  const auto t = fixture::random_tensor(2, 4, 5, 3, 11);
  const auto a = anomalies(EnsembleField(fixture::small_grid(2, 4, 5, 3), t));
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t k = 0; k < 5; ++k)
        EXPECT_NEAR(a.values(m, n, k, 0) + a.values(m, n, k, 1) + a.values(m, n, k, 2), 0.0, 1e-12);

  Tensor4 same(1, 2, 2, 2, 4.25);
  const auto flat = anomalies(EnsembleField(fixture::small_grid(1, 2, 2, 2), same));
  for (double v : flat.values.data()) EXPECT_EQ(v, 0.0);
}

TEST(Grid, AnomaliesRejectSingleRealization) {
  const EnsembleField f(fixture::small_grid(1, 2, 3, 1), Tensor4(1, 2, 3, 1));
  try {
    anomalies(f);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    EXPECT_NE(std::string(e.what()).find("anomalies undefined for single realization"), std::string::npos);
  }
}

TEST(Grid, ValidationCatchesBadInput) {
  EXPECT_THROW(EnsembleField(fixture::small_grid(1, 2, 3, 2), Tensor4(1, 2, 3, 1)), Error);
  Tensor4 bad(1, 2, 1, 1);
  bad(0, 1, 0, 0) = std::nan("");
  EXPECT_THROW(EnsembleField(fixture::small_grid(1, 2, 1, 1), bad), Error);
  SphereGrid g = fixture::small_grid(2, 4, 1, 1);
  std::swap(g.latitudes[0], g.latitudes[1]);
  EXPECT_THROW(g.validate(), Error);
  EXPECT_THROW(LandMask(1, 2, {0, 2}), Error);
}

TEST(Grid, TensorOrderIsRealizationFastest) {
  Tensor4 t(2, 3, 4, 5);
  EXPECT_EQ(t.index(0, 0, 0, 1), 1u);
  EXPECT_EQ(t.index(0, 0, 1, 0), 5u);
  EXPECT_EQ(t.index(0, 1, 0, 0), 20u);
  EXPECT_EQ(t.index(1, 0, 0, 0), 60u);
}

TEST(Grid, SyntheticMasks) {
  const auto ocean = synthetic_mask(2, 4, mask_pattern::AllOcean{});
  for (auto c : ocean.cells()) EXPECT_EQ(c, 0);
  const auto land = synthetic_mask(2, 4, mask_pattern::AllLand{});
  for (auto c : land.cells()) EXPECT_EQ(c, 1);
  const auto half = synthetic_mask(3, 4, mask_pattern::HalfSplit{});
  for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(half.row(m), (std::vector<std::uint8_t>{1, 1, 0, 0}));
  const auto none = synthetic_mask(3, 5, mask_pattern::Random{0.0, 42});
  for (auto c : none.cells()) EXPECT_EQ(c, 0);
  const auto wrap = synthetic_mask(1, 6, mask_pattern::Blocks{{{{4, 1}}}});
  EXPECT_EQ(wrap.row(0), (std::vector<std::uint8_t>{1, 0, 0, 0, 1, 1}));
}
