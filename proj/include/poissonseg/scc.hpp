#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "poissonseg/parallel.hpp"
#include "poissonseg/poisson.hpp"
#include "poissonseg/prototype.hpp"
#include "poissonseg/tensor.hpp"

namespace poissonseg {

/// y = W x + b with W stored out x in.
struct AffineLayer {
  Matrix weight;
  std::vector<double> bias;

  std::size_t input_dim() const noexcept { return weight.cols(); }
  std::size_t output_dim() const noexcept { return weight.rows(); }

  void validate() const {
    detail::require(weight.rows() >= 1 && weight.cols() >= 1, ErrorKind::ShapeMismatch, "affine layer is empty");
    detail::require(bias.size() == weight.rows(), ErrorKind::ShapeMismatch,
                    "affine bias length " + std::to_string(bias.size()) + " != output dim " +
                        std::to_string(weight.rows()));
    detail::require_finite(bias, "affine bias");
  }

  void apply(std::span<const double> x, std::span<double> y) const noexcept {
    for (std::size_t o = 0; o < weight.rows(); ++o) {
      double acc = bias[o];
      const auto w = weight.row(o);
      for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
      y[o] = acc;
    }
  }
};

/// Two affine layers with a ReLU in between.
struct TwoLayerMlp {
  AffineLayer hidden;
  AffineLayer output;

  void validate() const {
    hidden.validate();
    output.validate();
    detail::require(output.input_dim() == hidden.output_dim(), ErrorKind::ShapeMismatch,
                    "MLP layer widths do not chain");
  }

  void apply(std::span<const double> x, std::span<double> y) const {
    std::vector<double> mid(hidden.output_dim());
    hidden.apply(x, mid);
    for (double& v : mid) v = std::max(v, 0.0);
    output.apply(mid, y);
  }
};

using SimilarityMap = FeatureMap;
using FusedMap = FeatureMap;
using CalibratedMap = FeatureMap;

/// Per-pixel comparison of query features against the global prototype.
/// Without parameters: one channel holding cos(query pixel, prototype).
/// With parameters: a 1x1 convolution over the concatenation
/// [query pixel, prototype] of length 2C.
inline SimilarityMap similarity_map(const FeatureMap& query, const PrototypeVector& proto,
                                    const std::optional<AffineLayer>& params = std::nullopt) {
  detail::require(proto.vector.size() == query.channels(), ErrorKind::ShapeMismatch,
                  "prototype length " + std::to_string(proto.vector.size()) + " != query channels " +
                      std::to_string(query.channels()));
  const std::size_t h = query.height(), w = query.width(), c = query.channels();
  const Matrix pixels = query.pixel_matrix();
  if (!params) {
    Matrix out(h * w, 1);
    for (std::size_t p = 0; p < h * w; ++p) out(p, 0) = cosine_similarity(pixels.row(p), proto.vector);
    return FeatureMap::from_pixel_matrix(out, h, w);
  }
  params->validate();
  detail::require(params->input_dim() == 2 * c, ErrorKind::ShapeMismatch,
                  "similarity weights expect input dim " + std::to_string(params->input_dim()) + ", need 2C = " +
                      std::to_string(2 * c));
  Matrix out(h * w, params->output_dim());
  std::vector<double> joined(2 * c);
  std::copy(proto.vector.begin(), proto.vector.end(), joined.begin() + static_cast<std::ptrdiff_t>(c));
  for (std::size_t p = 0; p < h * w; ++p) {
    const auto px = pixels.row(p);
    std::copy(px.begin(), px.end(), joined.begin());
    params->apply(joined, out.row(p));
  }
  return FeatureMap::from_pixel_matrix(out, h, w);
}

/// Multiplies every channel by the confidence map.
inline FusedMap fuse_confidence(const SimilarityMap& sim, const ConfidenceMap& conf) {
  detail::require(sim.height() == conf.height() && sim.width() == conf.width(), ErrorKind::ShapeMismatch,
                  "confidence map does not match similarity map resolution");
  FusedMap out = sim;
  const std::size_t hw = sim.pixel_count();
  auto data = out.data();
  for (std::size_t c = 0; c < sim.channels(); ++c)
    for (std::size_t p = 0; p < hw; ++p) data[c * hw + p] *= conf.data()[p];
  return out;
}

/// Spatial consistency calibration:
///   out_i = (1/HW) Σ_j ReLU(cos(v_i, v_j)) h(v_j)
/// over all pixels j, including i. `h` defaults to the identity.
inline CalibratedMap spatial_consistency_calibrate(const FusedMap& fused,
                                                   const std::optional<TwoLayerMlp>& h = std::nullopt) {
  const std::size_t hw = fused.pixel_count();
  const Matrix v = fused.pixel_matrix();

  Matrix transformed;
  if (h) {
    h->validate();
    detail::require(h->hidden.input_dim() == fused.channels(), ErrorKind::ShapeMismatch,
                    "calibration MLP expects " + std::to_string(h->hidden.input_dim()) + " channels, map has " +
                        std::to_string(fused.channels()));
    transformed = Matrix(hw, h->output.output_dim());
    for (std::size_t j = 0; j < hw; ++j) h->apply(v.row(j), transformed.row(j));
  } else {
    transformed = v;
  }

  const std::size_t out_c = transformed.cols();
  const double inv = 1.0 / static_cast<double>(hw);
  Matrix out(hw, out_c);
  parallel_for(hw, [&](std::size_t i) {
    auto oi = out.row(i);
    const auto vi = v.row(i);
    for (std::size_t j = 0; j < hw; ++j) {
      const double s = cosine_similarity(vi, v.row(j));
      if (s <= 0.0) continue;
      const auto tj = transformed.row(j);
      for (std::size_t c = 0; c < out_c; ++c) oi[c] += s * tj[c];
    }
    for (std::size_t c = 0; c < out_c; ++c) oi[c] *= inv;
  }, 32);
  return FeatureMap::from_pixel_matrix(out, fused.height(), fused.width());
}

}  // namespace poissonseg
