#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poissonseg/error.hpp"

namespace poissonseg {

namespace detail {

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, std::string(what) + " holds a non-finite value");
  }
}

inline std::string dims_string(std::span<const std::size_t> dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

}  // namespace detail

/// Dense row-major array of doubles with arbitrary rank.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims)
      : dims_(std::move(dims)), data_(element_count(dims_), 0.0) {}

  Tensor(std::vector<std::size_t> dims, std::vector<double> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    detail::require(element_count(dims_) == data_.size(), ErrorKind::ShapeMismatch,
                    "tensor dims " + detail::dims_string(dims_) + " do not match " +
                        std::to_string(data_.size()) + " values");
    detail::require_finite(data_, "tensor");
  }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::vector<double> release() && { return std::move(data_); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    for (std::size_t d : dims) {
      detail::require(d > 0, ErrorKind::ShapeMismatch, "tensor dims must be positive");
    }
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

/// Row-major rows x cols matrix. Used for point sets (one point per row)
/// and for label matrices (one vertex per row).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    detail::require(data_.size() == rows_ * cols_, ErrorKind::ShapeMismatch,
                    "matrix data does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
    detail::require_finite(data_, "matrix");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// C x H x W feature grid, channel-major like a network activation.
class FeatureMap {
 public:
  FeatureMap() = default;

  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0)
      : c_(channels), h_(height), w_(width), data_(channels * height * width, fill) {
    check_extent();
  }

  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data)
      : c_(channels), h_(height), w_(width), data_(std::move(data)) {
    check_extent();
    detail::require(data_.size() == c_ * h_ * w_, ErrorKind::ShapeMismatch,
                    "feature map data does not match C*H*W");
    detail::require_finite(data_, "feature map");
  }

  std::size_t channels() const noexcept { return c_; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  std::size_t pixel_count() const noexcept { return h_ * w_; }

  double& at(std::size_t c, std::size_t y, std::size_t x) noexcept { return data_[(c * h_ + y) * w_ + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const noexcept { return data_[(c * h_ + y) * w_ + x]; }

  /// Copies the channel vector at (y, x).
  std::vector<double> pixel(std::size_t y, std::size_t x) const {
    std::vector<double> v(c_);
    for (std::size_t c = 0; c < c_; ++c) v[c] = at(c, y, x);
    return v;
  }

  /// Pixel vectors as rows of a (H*W) x C matrix, row-major over the grid.
  Matrix pixel_matrix() const {
    Matrix m(h_ * w_, c_);
    for (std::size_t c = 0; c < c_; ++c)
      for (std::size_t p = 0; p < h_ * w_; ++p) m(p, c) = data_[c * h_ * w_ + p];
    return m;
  }

  static FeatureMap from_pixel_matrix(const Matrix& pixels, std::size_t height, std::size_t width) {
    detail::require(pixels.rows() == height * width, ErrorKind::ShapeMismatch,
                    "pixel matrix rows do not match H*W");
    FeatureMap out(pixels.cols(), height, width);
    for (std::size_t p = 0; p < height * width; ++p)
      for (std::size_t c = 0; c < pixels.cols(); ++c) out.data_[c * height * width + p] = pixels(p, c);
    return out;
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Tensor to_tensor() const { return Tensor({c_, h_, w_}, data_); }

  static FeatureMap from_tensor(const Tensor& t) {
    detail::require(t.rank() == 3, ErrorKind::ShapeMismatch, "feature map tensor must be rank 3 (C,H,W)");
    return FeatureMap(t.dims()[0], t.dims()[1], t.dims()[2], std::vector<double>(t.data().begin(), t.data().end()));
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  void check_extent() const {
    detail::require(c_ >= 1 && h_ >= 1 && w_ >= 1, ErrorKind::ShapeMismatch,
                    "feature map extents must be positive");
  }

  std::size_t c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

/// H x W map of weights in [0, 1].
class SoftMask {
 public:
  SoftMask() = default;

  SoftMask(std::size_t height, std::size_t width, double fill = 0.0)
      : h_(height), w_(width), data_(height * width, fill) {
    validate();
  }

  SoftMask(std::size_t height, std::size_t width, std::vector<double> data)
      : h_(height), w_(width), data_(std::move(data)) {
    validate();
  }

  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }

  double operator()(std::size_t y, std::size_t x) const noexcept { return data_[y * w_ + x]; }
  /// Unchecked write; callers keep values within [0, 1].
  void set(std::size_t y, std::size_t x, double v) noexcept { data_[y * w_ + x] = v; }

  std::span<const double> data() const noexcept { return data_; }

  double sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

  Tensor to_tensor() const { return Tensor({h_, w_}, data_); }

  /// Accepts rank 2 (H,W) or rank 3 with a single leading channel.
  static SoftMask from_tensor(const Tensor& t) {
    const auto& d = t.dims();
    if (t.rank() == 2) return SoftMask(d[0], d[1], std::vector<double>(t.data().begin(), t.data().end()));
    if (t.rank() == 3 && d[0] == 1)
      return SoftMask(d[1], d[2], std::vector<double>(t.data().begin(), t.data().end()));
    detail::fail(ErrorKind::ShapeMismatch, "mask tensor must be (H,W) or (1,H,W)");
  }

  friend bool operator==(const SoftMask&, const SoftMask&) = default;

 private:
  void validate() const {
    detail::require(h_ >= 1 && w_ >= 1, ErrorKind::ShapeMismatch, "mask extents must be positive");
    detail::require(data_.size() == h_ * w_, ErrorKind::ShapeMismatch, "mask data does not match H*W");
    for (double v : data_) {
      detail::require(std::isfinite(v), ErrorKind::NonFiniteValue, "mask holds a non-finite value");
      detail::require(v >= 0.0 && v <= 1.0, ErrorKind::InvalidArgument, "mask values must lie in [0,1]");
    }
  }

  std::size_t h_ = 0, w_ = 0;
  std::vector<double> data_;
};

/// H x W map of {0, 1}.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t height, std::size_t width, std::uint8_t fill = 0)
      : h_(height), w_(width), data_(height * width, fill ? 1 : 0) {}
  BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> data)
      : h_(height), w_(width), data_(std::move(data)) {
    detail::require(data_.size() == h_ * w_, ErrorKind::ShapeMismatch, "mask data does not match H*W");
    for (auto v : data_) detail::require(v <= 1, ErrorKind::InvalidArgument, "binary mask values must be 0 or 1");
  }

  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }

  bool operator()(std::size_t y, std::size_t x) const noexcept { return data_[y * w_ + x] != 0; }
  void set(std::size_t y, std::size_t x, bool v) noexcept { data_[y * w_ + x] = v ? 1 : 0; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::size_t count() const noexcept { return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1)); }

  Tensor to_tensor() const { return Tensor({h_, w_}, std::vector<double>(data_.begin(), data_.end())); }

  /// Values must already be exactly 0 or 1.
  static BinaryMask from_tensor(const Tensor& t) {
    const SoftMask soft = SoftMask::from_tensor(t);
    std::vector<std::uint8_t> bits(soft.data().size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      const double v = soft.data()[i];
      detail::require(v == 0.0 || v == 1.0, ErrorKind::InvalidArgument, "binary mask values must be 0 or 1");
      bits[i] = v == 1.0 ? 1 : 0;
    }
    return BinaryMask(soft.height(), soft.width(), std::move(bits));
  }

  /// Foreground iff value >= threshold.
  static BinaryMask threshold(const SoftMask& m, double threshold) {
    BinaryMask out(m.height(), m.width());
    for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] = m.data()[i] >= threshold ? 1 : 0;
    return out;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t h_ = 0, w_ = 0;
  std::vector<std::uint8_t> data_;
};

struct Extent2D {
  std::size_t rows = 1;
  std::size_t cols = 1;
  friend bool operator==(const Extent2D&, const Extent2D&) = default;
};

/// Channel-wise average pooling. Windows that would run past the border are
/// dropped, so the output grid is floor((H-h)/sh)+1 by floor((W-w)/sw)+1.
inline FeatureMap avg_pool(const FeatureMap& map, Extent2D window, Extent2D stride) {
  detail::require(window.rows >= 1 && window.cols >= 1 && stride.rows >= 1 && stride.cols >= 1,
                  ErrorKind::InvalidArgument, "pooling window and stride must be positive");
  detail::require(window.rows <= map.height() && window.cols <= map.width(), ErrorKind::WindowTooLarge,
                  "pooling window " + std::to_string(window.rows) + "x" + std::to_string(window.cols) +
                      " exceeds map " + std::to_string(map.height()) + "x" + std::to_string(map.width()));
  const std::size_t out_h = (map.height() - window.rows) / stride.rows + 1;
  const std::size_t out_w = (map.width() - window.cols) / stride.cols + 1;
  const double inv_area = 1.0 / static_cast<double>(window.rows * window.cols);
  FeatureMap out(map.channels(), out_h, out_w);
  for (std::size_t c = 0; c < map.channels(); ++c) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < window.rows; ++dy)
          for (std::size_t dx = 0; dx < window.cols; ++dx)
            acc += map.at(c, oy * stride.rows + dy, ox * stride.cols + dx);
        out.at(c, oy, ox) = acc * inv_area;
      }
    }
  }
  return out;
}

inline FeatureMap avg_pool(const FeatureMap& map, Extent2D window) { return avg_pool(map, window, window); }

inline constexpr double kZeroNorm = 1e-12;

/// Cosine of the angle between u and v; 0 when either norm is below 1e-12.
inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  detail::require(u.size() == v.size(), ErrorKind::LengthMismatch,
                  "cosine_similarity on vectors of length " + std::to_string(u.size()) + " and " +
                      std::to_string(v.size()));
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  if (nu < kZeroNorm || nv < kZeroNorm) return 0.0;
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

/// Area-average downsampling: each target cell is the mean of the source
/// area it covers, with fractional overlap at cell edges when the factors
/// are not integral.
inline SoftMask downsample_mask(const SoftMask& mask, Extent2D target) {
  detail::require(target.rows >= 1 && target.cols >= 1, ErrorKind::InvalidArgument,
                  "target extent must be positive");
  detail::require(target.rows <= mask.height() && target.cols <= mask.width(), ErrorKind::UpsampleRequested,
                  "cannot downsample " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                      " to " + std::to_string(target.rows) + "x" + std::to_string(target.cols));
  if (target.rows == mask.height() && target.cols == mask.width()) return mask;

  // Overlap of source index s with target cell t along one axis, in source units.
  auto overlaps = [](std::size_t src, std::size_t dst) {
    std::vector<std::vector<std::pair<std::size_t, double>>> table(dst);
    const double scale = static_cast<double>(src) / static_cast<double>(dst);
    for (std::size_t t = 0; t < dst; ++t) {
      const double lo = static_cast<double>(t) * scale;
      const double hi = static_cast<double>(t + 1) * scale;
      for (auto s = static_cast<std::size_t>(std::floor(lo)); s < src && static_cast<double>(s) < hi; ++s) {
        const double w = std::min(hi, static_cast<double>(s + 1)) - std::max(lo, static_cast<double>(s));
        if (w > 0.0) table[t].emplace_back(s, w);
      }
    }
    return table;
  };
  const auto rows = overlaps(mask.height(), target.rows);
  const auto cols = overlaps(mask.width(), target.cols);

  std::vector<double> out(target.rows * target.cols);
  for (std::size_t ty = 0; ty < target.rows; ++ty) {
    for (std::size_t tx = 0; tx < target.cols; ++tx) {
      double acc = 0.0, area = 0.0;
      for (auto [sy, wy] : rows[ty])
        for (auto [sx, wx] : cols[tx]) {
          acc += wy * wx * mask(sy, sx);
          area += wy * wx;
        }
      out[ty * target.cols + tx] = std::clamp(acc / area, 0.0, 1.0);
    }
  }
  return SoftMask(target.rows, target.cols, std::move(out));
}

}  // namespace poissonseg
