#pragma once

#include <cstddef>
#include <vector>

#include "poissonseg/tensor.hpp"

namespace poissonseg {

enum class PrototypeLabel { Unlabeled, Background, Foreground };

struct GridPos {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

/// Mean feature vector of one pooling window.
struct LocalPrototype {
  std::vector<double> vector;
  GridPos grid_pos;
  PrototypeLabel label = PrototypeLabel::Unlabeled;
};

/// Mask-weighted global prototype.
struct PrototypeVector {
  std::vector<double> vector;
};

/// Result of tiling a map into non-overlapping windows: prototypes in
/// row-major grid order plus the grid extent.
struct PrototypeGrid {
  std::vector<LocalPrototype> prototypes;
  Extent2D grid;
};

inline PrototypeGrid local_prototype_pool(const FeatureMap& map, Extent2D window) {
  const FeatureMap pooled = avg_pool(map, window, window);
  PrototypeGrid out;
  out.grid = {pooled.height(), pooled.width()};
  out.prototypes.reserve(pooled.pixel_count());
  for (std::size_t y = 0; y < pooled.height(); ++y)
    for (std::size_t x = 0; x < pooled.width(); ++x)
      out.prototypes.push_back({pooled.pixel(y, x), {y, x}, PrototypeLabel::Unlabeled});
  return out;
}

/// Mask averaged over each pooling window, i.e. the foreground occupancy of
/// every local prototype's footprint.
inline SoftMask pool_mask(const SoftMask& mask, Extent2D window) {
  const FeatureMap as_map(1, mask.height(), mask.width(), std::vector<double>(mask.data().begin(), mask.data().end()));
  const FeatureMap pooled = avg_pool(as_map, window, window);
  std::vector<double> v(pooled.data().begin(), pooled.data().end());
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  return SoftMask(pooled.height(), pooled.width(), std::move(v));
}

inline constexpr double kDefaultLabelThreshold = 0.5;

/// Foreground iff the pooled mask value at the prototype's cell is >= tau.
inline std::vector<LocalPrototype> assign_prototype_labels(std::vector<LocalPrototype> protos,
                                                           const SoftMask& grid_mask,
                                                           double tau = kDefaultLabelThreshold) {
  detail::require(tau > 0.0 && tau < 1.0, ErrorKind::InvalidArgument, "label threshold must lie in (0,1)");
  for (auto& p : protos) {
    detail::require(p.grid_pos.row < grid_mask.height() && p.grid_pos.col < grid_mask.width(),
                    ErrorKind::GridMismatch,
                    "prototype at (" + std::to_string(p.grid_pos.row) + "," + std::to_string(p.grid_pos.col) +
                        ") lies outside the " + std::to_string(grid_mask.height()) + "x" +
                        std::to_string(grid_mask.width()) + " label grid");
    p.label = grid_mask(p.grid_pos.row, p.grid_pos.col) >= tau ? PrototypeLabel::Foreground
                                                               : PrototypeLabel::Background;
  }
  return protos;
}

/// Overload that also checks the mask covers exactly the pooled grid.
inline std::vector<LocalPrototype> assign_prototype_labels(PrototypeGrid grid, const SoftMask& grid_mask,
                                                           double tau = kDefaultLabelThreshold) {
  detail::require(grid_mask.height() == grid.grid.rows && grid_mask.width() == grid.grid.cols,
                  ErrorKind::GridMismatch,
                  "label mask " + std::to_string(grid_mask.height()) + "x" + std::to_string(grid_mask.width()) +
                      " does not match prototype grid " + std::to_string(grid.grid.rows) + "x" +
                      std::to_string(grid.grid.cols));
  return assign_prototype_labels(std::move(grid.prototypes), grid_mask, tau);
}

/// Weighted channel mean sum(m * f) / sum(m).
inline PrototypeVector masked_average_pool(const FeatureMap& map, const SoftMask& mask) {
  detail::require(mask.height() == map.height() && mask.width() == map.width(), ErrorKind::ShapeMismatch,
                  "mask does not match feature map resolution");
  const double total = mask.sum();
  detail::require(total > 0.0, ErrorKind::DegenerateMask, "support mask has no foreground");
  PrototypeVector out{std::vector<double>(map.channels(), 0.0)};
  const std::size_t hw = map.pixel_count();
  const auto data = map.data();
  for (std::size_t c = 0; c < map.channels(); ++c) {
    double acc = 0.0;
    for (std::size_t p = 0; p < hw; ++p) acc += mask.data()[p] * data[c * hw + p];
    out.vector[c] = acc / total;
  }
  return out;
}

}  // namespace poissonseg
