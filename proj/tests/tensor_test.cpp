#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "poissonseg/tensor.hpp"
#include "test_support.hpp"

namespace poissonseg {
namespace {

TEST(TensorTest, RejectsMismatchedDims) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), Error);
  EXPECT_NO_THROW(Tensor({2, 3}, std::vector<double>(6)));
}

TEST(TensorTest, RejectsNonFiniteValues) {
  try {
    Tensor({2}, {1.0, std::numeric_limits<double>::quiet_NaN()});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteValue);
  }
  EXPECT_THROW(FeatureMap(1, 1, 1, std::vector<double>{std::numeric_limits<double>::infinity()}), Error);
}

TEST(TensorTest, SoftMaskRange) {
  EXPECT_THROW(SoftMask(1, 2, std::vector<double>{0.5, 1.5}), Error);
  EXPECT_NO_THROW(SoftMask(1, 2, std::vector<double>{0.0, 1.0}));
}

TEST(AvgPoolTest, TwoByTwoMean) {
  const FeatureMap f(1, 2, 2, std::vector<double>{1, 2, 3, 4});
  const FeatureMap out = avg_pool(f, {2, 2});
  ASSERT_EQ(out.height(), 1u);
  ASSERT_EQ(out.width(), 1u);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0), 2.5);
}

TEST(AvgPoolTest, UnitWindowIsIdentity) {
  std::mt19937_64 rng(1);
  const FeatureMap f = testing::random_map(3, 5, 4, rng);
  EXPECT_EQ(avg_pool(f, {1, 1}, {1, 1}), f);
}

TEST(AvgPoolTest, ConstantMapStaysConstant) {
  const FeatureMap f(2, 6, 6, 3.25);
  for (Extent2D w : {Extent2D{2, 2}, Extent2D{3, 2}, Extent2D{6, 6}}) {
    const FeatureMap out = avg_pool(f, w);
    for (double v : out.data()) EXPECT_DOUBLE_EQ(v, 3.25);
  }
}

TEST(AvgPoolTest, OutputExtentFormula) {
  const FeatureMap f(1, 7, 9);
  const FeatureMap out = avg_pool(f, {3, 2}, {2, 3});
  EXPECT_EQ(out.height(), (7u - 3) / 2 + 1);
  EXPECT_EQ(out.width(), (9u - 2) / 3 + 1);
}

TEST(AvgPoolTest, WindowTooLarge) {
  const FeatureMap f(1, 4, 4);
  try {
    avg_pool(f, {5, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WindowTooLarge);
  }
}

TEST(AvgPoolTest, Linearity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureMap f = testing::random_map(3, 8, 8, rng);
    const FeatureMap g = testing::random_map(3, 8, 8, rng);
    const double a = u(rng), b = u(rng);
    FeatureMap combo(3, 8, 8);
    for (std::size_t i = 0; i < combo.data().size(); ++i) combo.data()[i] = a * f.data()[i] + b * g.data()[i];
    const auto lhs = avg_pool(combo, {2, 4});
    const auto pf = avg_pool(f, {2, 4});
    const auto pg = avg_pool(g, {2, 4});
    for (std::size_t i = 0; i < lhs.data().size(); ++i)
      EXPECT_NEAR(lhs.data()[i], a * pf.data()[i] + b * pg.data()[i], 1e-12);
  }
}

TEST(AvgPoolTest, FullExtentIsGlobalMean) {
  std::mt19937_64 rng(3);
  const FeatureMap f = testing::random_map(4, 5, 6, rng);
  const FeatureMap out = avg_pool(f, {5, 6});
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0;
    for (std::size_t y = 0; y < 5; ++y)
      for (std::size_t x = 0; x < 6; ++x) mean += f.at(c, y, x);
    EXPECT_NEAR(out.at(c, 0, 0), mean / 30.0, 1e-12);
  }
}

TEST(CosineTest, Cases) {
  const std::vector<double> u{1, 2, 3}, neg{-1, -2, -3}, zero{0, 0, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(u, u), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(u, neg), -1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 5}), 0.0);
  EXPECT_EQ(cosine_similarity(u, zero), 0.0);
  EXPECT_EQ(cosine_similarity(zero, zero), 0.0);
}

TEST(CosineTest, LengthMismatch) {
  try {
    cosine_similarity(std::vector<double>{1, 2}, std::vector<double>{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
}

TEST(CosineTest, PositiveScaleInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int t = 0; t < 100; ++t) {
    const Matrix m = testing::random_points(2, 6, rng);
    std::vector<double> u(m.row(0).begin(), m.row(0).end());
    const double c = scale(rng);
    std::vector<double> cu = u;
    for (double& v : cu) v *= c;
    EXPECT_NEAR(cosine_similarity(cu, m.row(1)), cosine_similarity(u, m.row(1)), 1e-12);
  }
}

TEST(DownsampleTest, Examples) {
  const SoftMask ones(4, 4, 1.0);
  const SoftMask d = downsample_mask(ones, {2, 2});
  for (double v : d.data()) EXPECT_DOUBLE_EQ(v, 1.0);

  const SoftMask corner(2, 2, std::vector<double>{1, 0, 0, 0});
  EXPECT_DOUBLE_EQ(downsample_mask(corner, {1, 1})(0, 0), 0.25);

  std::mt19937_64 rng(5);
  const SoftMask r = testing::random_mask(3, 5, rng);
  EXPECT_EQ(downsample_mask(r, {3, 5}), r);
}

TEST(DownsampleTest, UpsampleRequested) {
  try {
    downsample_mask(SoftMask(2, 2), {3, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UpsampleRequested);
  }
}

TEST(DownsampleTest, PreservesMeanOnEvenDivision) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const SoftMask m = testing::random_mask(12, 18, rng);
    for (Extent2D target : {Extent2D{6, 9}, Extent2D{4, 6}, Extent2D{1, 1}, Extent2D{3, 2}}) {
      const SoftMask d = downsample_mask(m, target);
      EXPECT_NEAR(d.sum() / static_cast<double>(target.rows * target.cols), m.sum() / (12.0 * 18.0), 1e-12);
    }
  }
}

TEST(DownsampleTest, FractionalFootprint) {
  // 3 -> 2 along one axis: cell 0 covers source [0, 1.5), cell 1 covers [1.5, 3).
  const SoftMask m(1, 3, std::vector<double>{1, 0, 1});
  const SoftMask d = downsample_mask(m, {1, 2});
  EXPECT_NEAR(d(0, 0), 1.0 / 1.5, 1e-15);
  EXPECT_NEAR(d(0, 1), 1.0 / 1.5, 1e-15);
}

}  // namespace
}  // namespace poissonseg
