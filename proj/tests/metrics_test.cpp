#include <gtest/gtest.h>

#include <random>

#include "poissonseg/metrics.hpp"
#include "test_support.hpp"

namespace poissonseg {
namespace {

BinaryMask mask(std::size_t h, std::size_t w, std::vector<std::uint8_t> v) { return BinaryMask(h, w, std::move(v)); }

TEST(DscTest, Examples) {
  const auto a = mask(2, 2, {1, 1, 0, 0});
  EXPECT_EQ(dsc(a, a), 1.0);
  EXPECT_EQ(dsc(a, mask(2, 2, {0, 0, 1, 1})), 0.0);
  EXPECT_EQ(dsc(a, mask(2, 2, {1, 0, 1, 0})), 0.5);
  EXPECT_EQ(dsc(mask(2, 2, {0, 0, 0, 0}), mask(2, 2, {0, 0, 0, 0})), 1.0);
}

TEST(DscTest, DimensionMismatch) {
  try {
    dsc(BinaryMask(2, 2), BinaryMask(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(DscTest, SymmetricAndInRange) {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 100; ++t) {
    const auto a = testing::random_binary(6, 7, rng), b = testing::random_binary(6, 7, rng);
    EXPECT_EQ(dsc(a, b), dsc(b, a));
    EXPECT_GE(dsc(a, b), 0.0);
    EXPECT_LE(dsc(a, b), 1.0);
  }
}

TEST(DiceLossTest, Examples) {
  std::mt19937_64 rng(52);
  const SoftMask x = testing::random_mask(4, 4, rng);
  EXPECT_NEAR(dice_loss(x, x), 1.0 - (2 * [&] {
    double s = 0;
    for (double v : x.data()) s += v * v;
    return s;
  }() + 1e-6) / (2 * x.sum() + 1e-6), 1e-15);
  const SoftMask ones(3, 3, 1.0), zeros(3, 3, 0.0);
  EXPECT_EQ(dice_loss(ones, ones), 0.0);
  EXPECT_EQ(dice_loss(zeros, zeros), 0.0);
  const SoftMask left(1, 2, std::vector<double>{1, 0}), right(1, 2, std::vector<double>{0, 1});
  EXPECT_DOUBLE_EQ(dice_loss(left, right), 1.0 - 1e-6 / (2.0 + 1e-6));
  EXPECT_THROW(dice_loss(left, ones), Error);
  EXPECT_THROW(dice_loss(left, right, 0.0), Error);
}

TEST(DiceLossTest, ApproachesOneMinusDsc) {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 100; ++t) {
    const auto a = testing::random_binary(8, 8, rng), b = testing::random_binary(8, 8, rng);
    if (a.count() + b.count() == 0) continue;
    const SoftMask sa = SoftMask::from_tensor(a.to_tensor()), sb = SoftMask::from_tensor(b.to_tensor());
    const double l = dice_loss(sa, sb, 1e-12);
    EXPECT_NEAR(l, 1.0 - dsc(a, b), 1e-9);
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 1.0);
  }
}

TEST(IouTest, Basic) {
  EXPECT_DOUBLE_EQ(iou(mask(1, 4, {1, 1, 0, 0}), mask(1, 4, {0, 1, 1, 0})), 1.0 / 3);
  EXPECT_EQ(pixel_accuracy(mask(1, 4, {1, 1, 0, 0}), mask(1, 4, {0, 1, 1, 0})), 0.5);
}

}  // namespace
}  // namespace poissonseg
