#include <gtest/gtest.h>

#include <vector>

#include "halo/error.hpp"
#include "halo/random.hpp"
#include "halo/sensitivity.hpp"
#include "oracles.hpp"

namespace {

TEST(Fisher, ZerosStayZero) {
  const halo::Matrix g(4, 3);
  EXPECT_EQ(halo::fisher_sensitivity(g), halo::Matrix(4, 3));
}

TEST(Fisher, SquaresElementwise) {
  halo::Matrix g(2, 2);
  g(1, 0) = 2.0f;
  EXPECT_EQ(halo::fisher_sensitivity(g)(1, 0), 4.0f);
}

TEST(Fisher, MeanOverSamplesMatchesLoop) {
  halo::Rng rng(11);
  std::vector<halo::Matrix> samples;
  for (int d = 0; d < 5; ++d) samples.push_back(oracle::random_matrix(rng, 7, 9));
  const auto f = halo::fisher_sensitivity(samples);
  for (std::size_t r = 0; r < 7; ++r) {
    for (std::size_t c = 0; c < 9; ++c) {
      double s = 0.0;
      for (const auto& g : samples) s += static_cast<double>(g(r, c)) * g(r, c);
      EXPECT_EQ(f(r, c), static_cast<float>(s / 5.0));
    }
  }
}

TEST(Fisher, RejectsNonFinite) {
  halo::Matrix g(2, 2);
  g(0, 1) = std::numeric_limits<float>::infinity();
  try {
    halo::fisher_sensitivity(g);
    FAIL();
  } catch (const halo::Error& e) {
    EXPECT_EQ(e.code(), halo::ErrorCode::NonFinite);
  }
}

TEST(Outliers, ConstantMatrixHasNone) {
  const auto s = halo::extract_outliers(halo::Matrix(10, 10, 3.5f));
  EXPECT_EQ(s.mask.count(), 0u);
}

TEST(Outliers, InjectedValueIsTheOnlyOutlier) {
  halo::Rng rng(5);
  auto w = oracle::random_matrix(rng, 100, 100);
  for (float& x : w.data()) x = std::clamp(x, -2.9f, 2.9f);
  w(42, 17) = 10.0f;
  const auto s = halo::extract_outliers(w);
  EXPECT_EQ(s.mask.count(), 1u);
  EXPECT_TRUE(s.mask(42, 17));
  EXPECT_EQ(s.without_outliers(42, 17), 0.0f);
  EXPECT_EQ(s.without_outliers(0, 0), w(0, 0));
}

TEST(Outliers, SymmetricInjection) {
  halo::Rng rng(6);
  auto w = oracle::random_matrix(rng, 100, 100);
  for (float& x : w.data()) x = std::clamp(x, -2.5f, 2.5f);
  w(1, 1) = 10.0f;
  w(2, 2) = -10.0f;
  const auto s = halo::extract_outliers(w);
  EXPECT_EQ(s.mask.count(), 2u);
  EXPECT_TRUE(s.mask(1, 1));
  EXPECT_TRUE(s.mask(2, 2));
}

TEST(Outliers, ShiftInvariant) {
  halo::Rng rng(8);
  auto w = oracle::random_matrix(rng, 64, 64);
  w(3, 3) = 7.0f;
  auto shifted = w;
  for (float& x : shifted.data()) x += 0.5f;
  EXPECT_EQ(halo::extract_outliers(w).mask, halo::extract_outliers(shifted).mask);
}

TEST(Outliers, NeedsTwoElements) { EXPECT_THROW(halo::extract_outliers(halo::Matrix(1, 1)), halo::Error); }

TEST(Salient, SpikePlusNextLargest) {
  halo::Rng rng(9);
  const auto w = oracle::random_matrix(rng, 100, 100);
  auto lambda = oracle::elementwise_square(oracle::random_matrix(rng, 100, 100));
  lambda(50, 50) = 1e6f;
  const auto m = halo::extract_salient(w, lambda, 0.0005);
  EXPECT_EQ(m.count(), 5u);
  EXPECT_TRUE(m(50, 50));
  EXPECT_EQ(m.bits, oracle::salient(lambda, 0.0005));
}

TEST(Salient, TiesGoToRowMajorOrder) {
  const halo::Matrix w(10, 10);
  const halo::Matrix lambda(10, 10, 1.0f);
  const auto m = halo::extract_salient(w, lambda, 0.05);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(m.bits[i], i < 5 ? 1 : 0);
}

TEST(Salient, FullFraction) {
  const halo::Matrix w(3, 3);
  const halo::Matrix lambda(3, 3, 2.0f);
  EXPECT_EQ(halo::extract_salient(w, lambda, 0.95).count(), 9u);
}

TEST(Salient, ExclusionAndCap) {
  halo::Rng rng(10);
  const auto w = oracle::random_matrix(rng, 20, 20);
  const auto lambda = oracle::elementwise_square(oracle::random_matrix(rng, 20, 20));
  const auto all = halo::extract_salient(w, lambda, 0.02);
  halo::Mask excluded(20, 20);
  std::size_t first = 0;
  while (!all.bits[first]) ++first;
  excluded.bits[first] = 1;
  const auto m = halo::extract_salient(w, lambda, 0.02, &excluded);
  EXPECT_FALSE(m.bits[first]);
  EXPECT_EQ(m.count(), all.count());
  EXPECT_EQ(halo::extract_salient(w, lambda, 0.02, nullptr, 3).count(), 3u);
}

TEST(Salient, ShapeMismatch) {
  try {
    halo::extract_salient(halo::Matrix(2, 3), halo::Matrix(3, 2), 0.1);
    FAIL();
  } catch (const halo::Error& e) {
    EXPECT_EQ(e.code(), halo::ErrorCode::ShapeMismatch);
  }
}

TEST(TileSensitivity, UnitTile) {
  const halo::Matrix g(2, 2, 1.0f);
  const auto grid = halo::tile_sensitivities(g, 2, 2);
  ASSERT_EQ(grid.tile_count(), 1u);
  EXPECT_EQ(grid.sensitivities[0], 1.0);
}

TEST(TileSensitivity, ZeroGradientTile) {
  halo::Matrix g(4, 4);
  g(0, 0) = 3.0f;
  const auto grid = halo::tile_sensitivities(g, 2, 2);
  EXPECT_EQ(grid.at(0, 0), 9.0 / 4.0);
  EXPECT_EQ(grid.at(1, 1), 0.0);
}

TEST(TileSensitivity, MatchesLoopOracleWithPadding) {
  halo::Rng rng(12);
  const auto g = oracle::random_matrix(rng, 256, 256);
  const auto grid = halo::tile_sensitivities(g, 128, 128);
  const auto want = oracle::tile_scores(g, 128, 128);
  ASSERT_EQ(grid.sensitivities.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(grid.sensitivities[i], want[i], 1e-12 * want[i]);

  const auto h = oracle::random_matrix(rng, 100, 70);
  const auto padded = halo::tile_sensitivities(h, 32, 32);
  EXPECT_EQ(padded.grid_rows, 4u);
  EXPECT_EQ(padded.grid_cols, 3u);
  const auto want2 = oracle::tile_scores(h, 32, 32);
  for (std::size_t i = 0; i < want2.size(); ++i) EXPECT_NEAR(padded.sensitivities[i], want2[i], 1e-12 * want2[i]);
}

TEST(AdaptiveK, RetentionExample) {
  const std::vector<double> s{0.9, 0.05, 0.05};
  const auto split = halo::compute_adaptive_k(s, 0.95);
  EXPECT_EQ(split.high_count, 2u);
  EXPECT_DOUBLE_EQ(split.k_fraction, 1.0 / 3.0);
  EXPECT_EQ(split.classes[0], halo::TileClass::High);
  EXPECT_EQ(split.classes[1], halo::TileClass::High);
  EXPECT_EQ(split.classes[2], halo::TileClass::Low);
}

TEST(AdaptiveK, SingleTile) {
  const std::vector<double> s{0.3};
  for (double r : {0.1, 0.5, 1.0}) {
    const auto split = halo::compute_adaptive_k(s, r);
    EXPECT_EQ(split.classes[0], halo::TileClass::High);
    EXPECT_EQ(split.k_fraction, 0.0);
  }
}

TEST(AdaptiveK, AllZeroIsAllLow) {
  const std::vector<double> s(5, 0.0);
  const auto split = halo::compute_adaptive_k(s, 0.95);
  EXPECT_EQ(split.k_fraction, 1.0);
  for (auto c : split.classes) EXPECT_EQ(c, halo::TileClass::Low);
}

TEST(AdaptiveK, RetentionOneNeedsEveryPositiveTile) {
  const std::vector<double> s{0.1, 0.4, 0.2, 0.3};
  const auto split = halo::compute_adaptive_k(s, 1.0);
  EXPECT_EQ(split.high_count, 4u);
}

TEST(AdaptiveK, ScaleInvariant) {
  halo::Rng rng(13);
  const auto g = oracle::random_matrix(rng, 256, 256);
  auto g3 = g;
  for (float& x : g3.data()) x *= 3.0f;
  const auto a = halo::compute_adaptive_k(halo::tile_sensitivities(g, 32, 32).sensitivities, 0.9);
  const auto b = halo::compute_adaptive_k(halo::tile_sensitivities(g3, 32, 32).sensitivities, 0.9);
  EXPECT_EQ(a.classes, b.classes);
  EXPECT_EQ(a.k_fraction, b.k_fraction);
}

TEST(AdaptiveK, MatchesGreedyOracleAndIsMinimal) {
  halo::Rng rng(14);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<double> s(64);
    for (double& x : s) x = std::exp(2.0 * rng.normal());
    const double retention = 0.5 + 0.49 * rng.uniform();
    const auto split = halo::compute_adaptive_k(s, retention);
    const auto want = oracle::high_tiles(s, retention);
    double total = 0.0, high = 0.0, smallest = 1e300;
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_EQ(split.classes[i] == halo::TileClass::High, want[i] == 1);
      total += s[i];
      if (want[i]) {
        high += s[i];
        smallest = std::min(smallest, s[i]);
      }
    }
    EXPECT_GE(high, retention * total * (1 - 1e-12));
    EXPECT_LT(high - smallest, retention * total);
  }
}

TEST(AdaptiveK, RejectsBadInput) {
  EXPECT_THROW(halo::compute_adaptive_k(std::vector<double>{}, 0.9), halo::Error);
  EXPECT_THROW(halo::compute_adaptive_k(std::vector<double>{1.0}, 0.0), halo::Error);
  EXPECT_THROW(halo::compute_adaptive_k(std::vector<double>{1.0}, 1.5), halo::Error);
}

}  // namespace
