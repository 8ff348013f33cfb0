#include <gtest/gtest.h>

#include <random>

#include "poissonseg/prototype.hpp"
#include "test_support.hpp"

namespace poissonseg {
namespace {

TEST(LocalPrototypePoolTest, RowMajorGrid) {
  std::vector<double> v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i);
  const FeatureMap f(1, 4, 4, v);
  const auto grid = local_prototype_pool(f, {2, 2});
  ASSERT_EQ(grid.prototypes.size(), 4u);
  EXPECT_EQ(grid.grid, (Extent2D{2, 2}));
  // Means of {0,1,4,5}, {2,3,6,7}, {8,9,12,13}, {10,11,14,15}.
  const double expected[] = {2.5, 4.5, 10.5, 12.5};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(grid.prototypes[i].vector[0], expected[i]);
    EXPECT_EQ(grid.prototypes[i].grid_pos, (GridPos{i / 2, i % 2}));
    EXPECT_EQ(grid.prototypes[i].label, PrototypeLabel::Unlabeled);
  }
}

TEST(LocalPrototypePoolTest, FullWindowGivesGlobalMean) {
  std::vector<double> v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i);
  const auto grid = local_prototype_pool(FeatureMap(1, 4, 4, v), {4, 4});
  ASSERT_EQ(grid.prototypes.size(), 1u);
  EXPECT_DOUBLE_EQ(grid.prototypes[0].vector[0], 7.5);
}

TEST(LocalPrototypePoolTest, ConstantMap) {
  const auto grid = local_prototype_pool(FeatureMap(3, 8, 8, -1.5), {4, 2});
  for (const auto& p : grid.prototypes) EXPECT_EQ(p.vector, (std::vector<double>{-1.5, -1.5, -1.5}));
}

TEST(LocalPrototypePoolTest, UnitWindowReproducesPixels) {
  std::mt19937_64 rng(4);
  const FeatureMap f = testing::random_map(5, 3, 7, rng);
  const auto grid = local_prototype_pool(f, {1, 1});
  const Matrix pixels = f.pixel_matrix();
  ASSERT_EQ(grid.prototypes.size(), pixels.rows());
  for (std::size_t i = 0; i < pixels.rows(); ++i)
    EXPECT_EQ(grid.prototypes[i].vector, std::vector<double>(pixels.row(i).begin(), pixels.row(i).end()));
}

TEST(LocalPrototypePoolTest, WindowTooLarge) {
  EXPECT_THROW(local_prototype_pool(FeatureMap(1, 4, 4), {8, 1}), Error);
}

TEST(AssignLabelsTest, ThresholdRule) {
  const auto grid = local_prototype_pool(FeatureMap(1, 4, 4), {2, 2});
  for (auto p : assign_prototype_labels(grid, SoftMask(2, 2, 1.0), 0.5)) EXPECT_EQ(p.label, PrototypeLabel::Foreground);
  for (auto p : assign_prototype_labels(grid, SoftMask(2, 2, 0.0), 0.5)) EXPECT_EQ(p.label, PrototypeLabel::Background);
  const auto boundary = assign_prototype_labels(grid, SoftMask(2, 2, std::vector<double>{0.5, 0.49, 0.51, 0}), 0.5);
  EXPECT_EQ(boundary[0].label, PrototypeLabel::Foreground);
  EXPECT_EQ(boundary[1].label, PrototypeLabel::Background);
  EXPECT_EQ(boundary[2].label, PrototypeLabel::Foreground);
  EXPECT_EQ(boundary[3].label, PrototypeLabel::Background);
}

TEST(AssignLabelsTest, GridMismatch) {
  const auto grid = local_prototype_pool(FeatureMap(1, 4, 4), {2, 2});
  try {
    assign_prototype_labels(grid, SoftMask(3, 2, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridMismatch);
  }
  EXPECT_THROW(assign_prototype_labels(grid, SoftMask(2, 2), 1.0), Error);
}

TEST(PoolMaskTest, MatchesDownsampleOnDivisibleGrid) {
  std::mt19937_64 rng(2);
  const SoftMask m = testing::random_mask(8, 12, rng);
  const SoftMask a = pool_mask(m, {4, 4});
  const SoftMask b = downsample_mask(m, {2, 3});
  for (std::size_t i = 0; i < a.data().size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-15);
}

TEST(MaskedAveragePoolTest, UniformMaskIsGlobalMean) {
  std::mt19937_64 rng(6);
  const FeatureMap f = testing::random_map(3, 4, 5, rng);
  const auto p = masked_average_pool(f, SoftMask(4, 5, 1.0));
  const auto global = avg_pool(f, {4, 5});
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(p.vector[c], global.at(c, 0, 0), 1e-12);
}

TEST(MaskedAveragePoolTest, OneHotPicksPixel) {
  std::mt19937_64 rng(8);
  const FeatureMap f = testing::random_map(3, 4, 5, rng);
  SoftMask m(4, 5);
  m.set(2, 3, 1.0);
  EXPECT_EQ(masked_average_pool(f, m).vector, f.pixel(2, 3));
}

TEST(MaskedAveragePoolTest, EmptyMaskIsDegenerate) {
  try {
    masked_average_pool(FeatureMap(2, 3, 3, 1.0), SoftMask(3, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateMask);
  }
}

TEST(MaskedAveragePoolTest, ShapeMismatch) {
  EXPECT_THROW(masked_average_pool(FeatureMap(2, 3, 3), SoftMask(3, 4, 1.0)), Error);
}

TEST(MaskedAveragePoolTest, ScaleInvariantAndInsideHull) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> scale(0.01, 1.0);
  for (int t = 0; t < 30; ++t) {
    const FeatureMap f = testing::random_map(4, 6, 6, rng);
    const SoftMask m = testing::random_mask(6, 6, rng);
    const double c = scale(rng);
    std::vector<double> scaled(m.data().begin(), m.data().end());
    for (double& v : scaled) v *= c;
    const auto p = masked_average_pool(f, m);
    const auto q = masked_average_pool(f, SoftMask(6, 6, scaled));
    for (std::size_t ch = 0; ch < 4; ++ch) {
      EXPECT_NEAR(p.vector[ch], q.vector[ch], 1e-12);
      double lo = 1e300, hi = -1e300;
      for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 6; ++x) {
          lo = std::min(lo, f.at(ch, y, x));
          hi = std::max(hi, f.at(ch, y, x));
        }
      EXPECT_GE(p.vector[ch], lo - 1e-12);
      EXPECT_LE(p.vector[ch], hi + 1e-12);
    }
  }
}

}  // namespace
}  // namespace poissonseg
