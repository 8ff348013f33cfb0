#pragma once

#include <algorithm>
#include <cstddef>

#include "poissonseg/tensor.hpp"

namespace poissonseg {

inline constexpr double kDefaultDiceEpsilon = 1e-6;

/// Human-readable statement of the DSC convention this library reports.
inline constexpr const char* kDscConvention = "score: DSC = 2|A∩B|/(|A|+|B|), higher is better";

/// 1 - (2 Σ XY + eps) / (Σ X + Σ Y + eps).
inline double dice_loss(const SoftMask& x, const SoftMask& y, double eps = kDefaultDiceEpsilon) {
  detail::require(x.height() == y.height() && x.width() == y.width(), ErrorKind::DimensionMismatch,
                  "dice_loss on masks of different size");
  detail::require(eps > 0.0, ErrorKind::InvalidArgument, "dice smoothing factor must be positive");
  double inter = 0.0, card = 0.0;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    inter += x.data()[i] * y.data()[i];
    card += x.data()[i] + y.data()[i];
  }
  return std::clamp(1.0 - (2.0 * inter + eps) / (card + eps), 0.0, 1.0);
}

/// Dice similarity 2|A∩B|/(|A|+|B|). Two empty masks score 1.
inline double dsc(const BinaryMask& a, const BinaryMask& b) {
  detail::require(a.height() == b.height() && a.width() == b.width(), ErrorKind::DimensionMismatch,
                  "dsc on masks of different size");
  std::size_t inter = 0, total = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    inter += a.data()[i] & b.data()[i];
    total += a.data()[i] + b.data()[i];
  }
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

/// Intersection over union; two empty masks score 1.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
  detail::require(a.height() == b.height() && a.width() == b.width(), ErrorKind::DimensionMismatch,
                  "iou on masks of different size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    inter += a.data()[i] & b.data()[i];
    uni += a.data()[i] | b.data()[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Fraction of equal pixels.
inline double pixel_accuracy(const BinaryMask& a, const BinaryMask& b) {
  detail::require(a.height() == b.height() && a.width() == b.width(), ErrorKind::DimensionMismatch,
                  "pixel_accuracy on masks of different size");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) same += a.data()[i] == b.data()[i];
  return static_cast<double>(same) / static_cast<double>(a.data().size());
}

}  // namespace poissonseg
