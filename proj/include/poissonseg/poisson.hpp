#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "poissonseg/graph.hpp"
#include "poissonseg/parallel.hpp"
#include "poissonseg/tensor.hpp"

namespace poissonseg {

/// Centered label source. Row i of `source_rows` is ŷ_i - ȳ for the first
/// n_s vertices and zero afterwards, so the matrix is the transpose of the
/// k x n source and has the same layout as the solution.
class LabelSource {
 public:
  LabelSource(std::size_t n, std::size_t k, std::size_t labeled, Matrix source_rows)
      : n_(n), k_(k), labeled_(labeled), rows_(std::move(source_rows)) {}

  std::size_t vertex_count() const noexcept { return n_; }
  std::size_t class_count() const noexcept { return k_; }
  std::size_t labeled_count() const noexcept { return labeled_; }

  /// Q^T, n x k.
  const Matrix& transposed() const noexcept { return rows_; }
  /// Entry Q[c, i].
  double operator()(std::size_t c, std::size_t i) const noexcept { return rows_(i, c); }

  /// Mean label vector ȳ.
  const std::vector<double>& mean_label() const noexcept { return mean_; }

  bool is_zero() const noexcept { return rows_.max_abs() == 0.0; }

 private:
  friend LabelSource build_source(std::span<const std::size_t>, std::size_t, std::size_t);
  std::size_t n_, k_, labeled_;
  Matrix rows_;
  std::vector<double> mean_;
};

/// Labels are class indices for vertices 0..n_s-1 (the one-hot ŷ_i is e_label).
inline LabelSource build_source(std::span<const std::size_t> labels, std::size_t n, std::size_t k) {
  detail::require(!labels.empty(), ErrorKind::NoLabels, "no labeled vertices");
  detail::require(k >= 1, ErrorKind::InvalidArgument, "class count must be positive");
  detail::require(labels.size() <= n, ErrorKind::DimensionMismatch,
                  std::to_string(labels.size()) + " labels for " + std::to_string(n) + " vertices");
  const std::size_t ns = labels.size();
  std::vector<double> mean(k, 0.0);
  for (std::size_t l : labels) {
    detail::require(l < k, ErrorKind::InvalidArgument,
                    "label " + std::to_string(l) + " out of range for " + std::to_string(k) + " classes");
    mean[l] += 1.0;
  }
  for (double& m : mean) m /= static_cast<double>(ns);

  Matrix q(n, k);
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t c = 0; c < k; ++c) q(i, c) = (labels[i] == c ? 1.0 : 0.0) - mean[c];
  LabelSource src(n, k, ns, std::move(q));
  src.mean_ = std::move(mean);
  return src;
}

/// One-hot overload: each row of `one_hot` (n_s x k) must hold a single 1.
inline LabelSource build_source(const Matrix& one_hot, std::size_t n) {
  std::vector<std::size_t> labels(one_hot.rows());
  for (std::size_t i = 0; i < one_hot.rows(); ++i) {
    std::size_t ones = 0;
    for (std::size_t c = 0; c < one_hot.cols(); ++c) {
      const double v = one_hot(i, c);
      detail::require(v == 0.0 || v == 1.0, ErrorKind::InvalidArgument, "label rows must be one-hot");
      if (v == 1.0) {
        labels[i] = c;
        ++ones;
      }
    }
    detail::require(ones == 1, ErrorKind::InvalidArgument, "label rows must be one-hot");
  }
  return build_source(labels, n, one_hot.cols());
}

enum class StopReason { Tolerance, MaxIterations, Direct };

inline const char* stop_reason_name(StopReason r) noexcept {
  switch (r) {
    case StopReason::Tolerance: return "tolerance";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Direct: return "direct";
  }
  return "unknown";
}

struct PropagationResult {
  Matrix solution;  // n x k, row i is g(p_i)
  std::size_t iterations = 0;
  double final_step = 0.0;
  StopReason stop = StopReason::Tolerance;
  std::vector<std::string> warnings;
};

struct SolverOptions {
  std::size_t max_iterations = 1000;
  double tolerance = 1e-6;
};

/// Called after every iterate with (t, R_t).
using IterationObserver = std::function<void(std::size_t, const Matrix&)>;

namespace detail {

inline void check_solvable(const WeightedGraph& graph, const LabelSource& source) {
  require(source.vertex_count() == graph.size(), ErrorKind::DimensionMismatch,
          "label source covers " + std::to_string(source.vertex_count()) + " vertices, graph has " +
              std::to_string(graph.size()));
  require(graph.is_connected(), ErrorKind::DisconnectedGraph, "graph has more than one connected component");
}

inline void warn_if_degenerate(const LabelSource& source, std::vector<std::string>& warnings) {
  if (source.is_zero())
    warnings.emplace_back("label source is identically zero (fewer than two labeled classes); solution is R = 0");
}

}  // namespace detail

/// Fixed-point iteration R <- R + D^{-1}(Q^T - L R) from R = 0. Stops when
/// the max-norm of the update drops below the tolerance or after
/// max_iterations updates.
inline PropagationResult poisson_solve_iterative(const WeightedGraph& graph, const LabelSource& source,
                                                 SolverOptions options = {},
                                                 const IterationObserver& observer = {}) {
  detail::check_solvable(graph, source);
  detail::require(options.tolerance >= 0.0, ErrorKind::InvalidArgument, "tolerance must be >= 0");

  const std::size_t n = graph.size();
  const std::size_t k = source.class_count();
  const Matrix& qt = source.transposed();
  const auto deg = graph.degrees();

  PropagationResult result;
  detail::warn_if_degenerate(source, result.warnings);
  result.stop = StopReason::MaxIterations;

  Matrix current(n, k);
  Matrix next(n, k);
  std::vector<double> row_step(n, 0.0);
  for (std::size_t t = 0; t < options.max_iterations; ++t) {
    parallel_for(n, [&](std::size_t i) {
      const auto ri = current.row(i);
      auto out = next.row(i);
      double step = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        double lr = deg[i] * ri[c];
        for (const auto& e : graph.neighbors(i)) lr -= e.weight * current(e.col, c);
        const double delta = (qt(i, c) - lr) / deg[i];
        out[c] = ri[c] + delta;
        step = std::max(step, std::abs(delta));
      }
      row_step[i] = step;
    }, 256);
    std::swap(current, next);
    result.iterations = t + 1;
    result.final_step = *std::max_element(row_step.begin(), row_step.end());
    if (observer) observer(result.iterations, current);
    if (result.final_step < options.tolerance) {
      result.stop = StopReason::Tolerance;
      break;
    }
  }
  result.solution = std::move(current);
  return result;
}

/// Σ_i d_i R[i,:], the quantity the propagation keeps at zero.
inline std::vector<double> degree_weighted_sum(const WeightedGraph& graph, const Matrix& r) {
  std::vector<double> s(r.cols(), 0.0);
  const auto deg = graph.degrees();
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t c = 0; c < r.cols(); ++c) s[c] += deg[i] * r(i, c);
  return s;
}

/// Shifts every column so that Σ_i d_i R[i,c] = 0.
inline Matrix degree_center(const WeightedGraph& graph, Matrix r) {
  const auto deg = graph.degrees();
  double total = 0.0;
  for (double d : deg) total += d;
  const auto sums = degree_weighted_sum(graph, r);
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t c = 0; c < r.cols(); ++c) r(i, c) -= sums[c] / total;
  return r;
}

/// Per-pixel foreground probability of the query.
using ConfidenceMap = SoftMask;

/// Takes the last n_q rows of R as the k x (H*W) query block, applies a
/// softmax over classes at each pixel and returns the last class channel.
inline ConfidenceMap extract_confidence_map(const PropagationResult& result, std::size_t n_q, std::size_t height,
                                            std::size_t width) {
  const Matrix& r = result.solution;
  detail::require(n_q == height * width, ErrorKind::ShapeMismatch,
                  "query count " + std::to_string(n_q) + " != H*W = " + std::to_string(height * width));
  detail::require(r.rows() >= n_q, ErrorKind::ShapeMismatch, "solution has fewer rows than query vertices");
  detail::require(r.cols() >= 1, ErrorKind::ShapeMismatch, "solution has no class columns");
  const std::size_t k = r.cols();
  const std::size_t offset = r.rows() - n_q;
  std::vector<double> conf(n_q);
  for (std::size_t p = 0; p < n_q; ++p) {
    const auto logits = r.row(offset + p);
    const double top = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - top);
    conf[p] = std::clamp(std::exp(logits[k - 1] - top) / z, 0.0, 1.0);
  }
  return ConfidenceMap(height, width, std::move(conf));
}

}  // namespace poissonseg
