#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poissonseg/graph.hpp"
#include "poissonseg/metrics.hpp"
#include "poissonseg/poisson.hpp"
#include "poissonseg/prototype.hpp"
#include "poissonseg/scc.hpp"
#include "poissonseg/tensor.hpp"

namespace poissonseg {

inline constexpr std::size_t kBackgroundClass = 0;
inline constexpr std::size_t kForegroundClass = 1;  // last class, read off by the confidence map
inline constexpr std::size_t kEpisodeClasses = 2;

enum class PredictionMode { PoissonOnly, Calibrated };

inline const char* prediction_mode_name(PredictionMode m) noexcept {
  return m == PredictionMode::PoissonOnly ? "poisson" : "calibrated";
}

struct EpisodeConfig {
  Extent2D window{4, 4};
  std::size_t neighbors = kDefaultNeighbors;
  Symmetrization symmetrization = Symmetrization::Mean;
  SolverOptions solver{};
  double label_threshold = kDefaultLabelThreshold;
  double prediction_threshold = 0.5;
  PredictionMode mode = PredictionMode::Calibrated;
  std::optional<AffineLayer> similarity_params;
  std::optional<TwoLayerMlp> calibration_params;
};

/// One 1-way 1-shot task. Masks may be at any resolution no smaller than
/// the feature maps; they are area-downsampled to (H, W).
struct Episode {
  FeatureMap support;
  SoftMask support_mask;
  std::vector<FeatureMap> auxiliary;
  FeatureMap query;
  std::optional<SoftMask> query_mask;
  EpisodeConfig config;
};

/// Graph vertices in support, auxiliary, query order.
struct VertexSet {
  Matrix points;
  std::size_t support_count = 0;
  std::size_t auxiliary_count = 0;
  std::size_t query_count = 0;
  std::vector<std::size_t> labels;  // class of each support vertex
  SoftMask support_occupancy;       // pooled support mask on the prototype grid
};

struct EpisodeResult {
  VertexSet vertices;
  WeightedGraph graph;
  PropagationResult propagation;
  ConfidenceMap confidence;
  SoftMask support_mask;  // at feature resolution
  PrototypeVector prototype;
  SimilarityMap similarity;
  FusedMap fused;
  CalibratedMap calibrated;
  BinaryMask poisson_mask;
  BinaryMask calibrated_mask;
  BinaryMask prediction;  // whichever of the two the config selects
  std::optional<BinaryMask> ground_truth;
  std::optional<double> dsc_poisson;
  std::optional<double> dsc_calibrated;
  std::optional<double> dsc;
  std::vector<std::string> warnings;
};

namespace detail {

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e.kind(), e.what(), stage);
  }
}

inline SoftMask to_feature_resolution(const SoftMask& mask, std::size_t h, std::size_t w) {
  return downsample_mask(mask, {h, w});
}

}  // namespace detail

inline void validate_episode(const Episode& ep) {
  const auto& s = ep.support;
  auto same_shape = [&](const FeatureMap& m) {
    return m.channels() == s.channels() && m.height() == s.height() && m.width() == s.width();
  };
  detail::require(same_shape(ep.query), ErrorKind::ShapeMismatch, "query features do not match support shape");
  for (const auto& a : ep.auxiliary)
    detail::require(same_shape(a), ErrorKind::ShapeMismatch, "auxiliary features do not match support shape");
  detail::require(ep.config.prediction_threshold > 0.0 && ep.config.prediction_threshold < 1.0,
                  ErrorKind::InvalidArgument, "prediction threshold must lie in (0,1)");
}

/// Support prototypes (labeled), auxiliary prototypes and query pixels.
inline VertexSet build_vertex_set(const Episode& ep, const SoftMask& support_mask) {
  const auto& cfg = ep.config;
  VertexSet vs;
  PrototypeGrid support_grid = local_prototype_pool(ep.support, cfg.window);
  vs.support_occupancy = pool_mask(support_mask, cfg.window);
  const auto labeled = assign_prototype_labels(std::move(support_grid), vs.support_occupancy, cfg.label_threshold);

  std::vector<PrototypeGrid> aux_grids;
  aux_grids.reserve(ep.auxiliary.size());
  for (const auto& a : ep.auxiliary) aux_grids.push_back(local_prototype_pool(a, cfg.window));

  vs.support_count = labeled.size();
  vs.auxiliary_count = 0;
  for (const auto& g : aux_grids) vs.auxiliary_count += g.prototypes.size();
  vs.query_count = ep.query.pixel_count();

  const std::size_t c = ep.support.channels();
  const std::size_t n = vs.support_count + vs.auxiliary_count + vs.query_count;
  vs.points = Matrix(n, c);
  std::size_t row = 0;
  auto put = [&](const std::vector<double>& v) {
    std::copy(v.begin(), v.end(), vs.points.row(row++).begin());
  };
  for (const auto& p : labeled) {
    put(p.vector);
    vs.labels.push_back(p.label == PrototypeLabel::Foreground ? kForegroundClass : kBackgroundClass);
  }
  for (const auto& g : aux_grids)
    for (const auto& p : g.prototypes) put(p.vector);
  const Matrix q = ep.query.pixel_matrix();
  for (std::size_t i = 0; i < q.rows(); ++i) std::copy(q.row(i).begin(), q.row(i).end(), vs.points.row(row++).begin());
  return vs;
}

/// Poisson mode: foreground iff the confidence is >= threshold.
inline BinaryMask predict_poisson_mask(const ConfidenceMap& conf, double threshold) {
  return BinaryMask::threshold(conf, threshold);
}

/// Calibrated mode: the channel mean of the calibrated map, min-max
/// normalized over the image, compared against the threshold. A flat map
/// falls back to comparing the raw channel mean.
inline BinaryMask predict_calibrated_mask(const CalibratedMap& calibrated, double threshold) {
  const std::size_t hw = calibrated.pixel_count();
  std::vector<double> score(hw, 0.0);
  const auto data = calibrated.data();
  for (std::size_t c = 0; c < calibrated.channels(); ++c)
    for (std::size_t p = 0; p < hw; ++p) score[p] += data[c * hw + p];
  for (double& s : score) s /= static_cast<double>(calibrated.channels());

  const auto [lo, hi] = std::minmax_element(score.begin(), score.end());
  const double low = *lo, range = *hi - *lo;
  BinaryMask out(calibrated.height(), calibrated.width());
  for (std::size_t p = 0; p < hw; ++p) {
    const double v = range > 1e-12 ? (score[p] - low) / range : score[p];
    out.set(p / calibrated.width(), p % calibrated.width(), v >= threshold);
  }
  return out;
}

inline BinaryMask predict_mask(const ConfidenceMap& conf, const CalibratedMap& calibrated, double threshold,
                               PredictionMode mode) {
  return mode == PredictionMode::PoissonOnly ? predict_poisson_mask(conf, threshold)
                                             : predict_calibrated_mask(calibrated, threshold);
}

/// Runs the whole pipeline and keeps every intermediate.
inline EpisodeResult run_episode(const Episode& ep) {
  detail::run_stage("validate", [&] { validate_episode(ep); });
  const auto& cfg = ep.config;
  const std::size_t h = ep.query.height(), w = ep.query.width();

  EpisodeResult r;
  r.support_mask = detail::run_stage("support_mask",
                                     [&] { return detail::to_feature_resolution(ep.support_mask, h, w); });
  r.vertices = detail::run_stage("vertices", [&] { return build_vertex_set(ep, r.support_mask); });
  r.graph = detail::run_stage("graph", [&] {
    return build_weight_graph(r.vertices.points, cfg.neighbors, cfg.symmetrization);
  });
  r.propagation = detail::run_stage("propagate", [&] {
    const LabelSource source = build_source(r.vertices.labels, r.graph.size(), kEpisodeClasses);
    return poisson_solve_iterative(r.graph, source, cfg.solver);
  });
  r.warnings = r.propagation.warnings;
  r.confidence = detail::run_stage("confidence", [&] {
    return extract_confidence_map(r.propagation, r.vertices.query_count, h, w);
  });
  r.prototype = detail::run_stage("prototype", [&] { return masked_average_pool(ep.support, r.support_mask); });
  r.similarity = detail::run_stage("similarity",
                                   [&] { return similarity_map(ep.query, r.prototype, cfg.similarity_params); });
  r.fused = detail::run_stage("fuse", [&] { return fuse_confidence(r.similarity, r.confidence); });
  r.calibrated = detail::run_stage("calibrate",
                                   [&] { return spatial_consistency_calibrate(r.fused, cfg.calibration_params); });
  r.poisson_mask = predict_poisson_mask(r.confidence, cfg.prediction_threshold);
  r.calibrated_mask = predict_calibrated_mask(r.calibrated, cfg.prediction_threshold);
  r.prediction = cfg.mode == PredictionMode::PoissonOnly ? r.poisson_mask : r.calibrated_mask;

  if (ep.query_mask) {
    detail::run_stage("score", [&] {
      r.ground_truth = BinaryMask::threshold(detail::to_feature_resolution(*ep.query_mask, h, w), 0.5);
      r.dsc_poisson = dsc(r.poisson_mask, *r.ground_truth);
      r.dsc_calibrated = dsc(r.calibrated_mask, *r.ground_truth);
      r.dsc = cfg.mode == PredictionMode::PoissonOnly ? r.dsc_poisson : r.dsc_calibrated;
    });
  }
  return r;
}

}  // namespace poissonseg
