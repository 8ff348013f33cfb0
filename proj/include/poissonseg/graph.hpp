#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "poissonseg/parallel.hpp"
#include "poissonseg/tensor.hpp"

namespace poissonseg {

inline constexpr std::size_t kDefaultNeighbors = 10;
inline constexpr double kDistanceFloor = 1e-12;

/// Weighted undirected graph stored as CSR with sorted column indices.
/// Weights are symmetric, nonnegative, with an empty diagonal.
class WeightedGraph {
 public:
  struct Edge {
    std::size_t col;
    double weight;
  };

  WeightedGraph() = default;

  /// Builds from per-row adjacency lists. Rows are sorted by column; the
  /// caller guarantees symmetry.
  explicit WeightedGraph(std::vector<std::vector<Edge>> rows) : offsets_(rows.size() + 1, 0) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto& r = rows[i];
      std::sort(r.begin(), r.end(), [](const Edge& a, const Edge& b) { return a.col < b.col; });
      offsets_[i + 1] = offsets_[i] + r.size();
    }
    edges_.reserve(offsets_.back());
    for (auto& r : rows) edges_.insert(edges_.end(), r.begin(), r.end());
    degrees_.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double d = 0.0;
      for (const Edge& e : neighbors(i)) d += e.weight;
      degrees_[i] = d;
    }
  }

  /// Builds from an undirected edge list; each (i, j, w) is mirrored.
  /// Duplicate pairs and self loops are rejected.
  static WeightedGraph from_edges(std::size_t n, std::span<const std::tuple<std::size_t, std::size_t, double>> edges) {
    std::vector<std::vector<Edge>> rows(n);
    for (auto [i, j, w] : edges) {
      detail::require(i < n && j < n, ErrorKind::DimensionMismatch, "edge endpoint out of range");
      detail::require(i != j, ErrorKind::InvalidArgument, "self loops are not allowed");
      detail::require(std::isfinite(w) && w >= 0.0, ErrorKind::InvalidArgument, "edge weights must be finite and >= 0");
      rows[i].push_back({j, w});
      rows[j].push_back({i, w});
    }
    for (auto& r : rows) {
      std::sort(r.begin(), r.end(), [](const Edge& a, const Edge& b) { return a.col < b.col; });
      for (std::size_t k = 1; k < r.size(); ++k)
        detail::require(r[k].col != r[k - 1].col, ErrorKind::InvalidArgument, "duplicate edge");
    }
    return WeightedGraph(std::move(rows));
  }

  std::size_t size() const noexcept { return degrees_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size() / 2; }

  std::span<const Edge> neighbors(std::size_t i) const noexcept {
    return {edges_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  std::span<const double> degrees() const noexcept { return degrees_; }

  /// w_ij, zero when absent.
  double weight(std::size_t i, std::size_t j) const noexcept {
    const auto row = neighbors(i);
    auto it = std::lower_bound(row.begin(), row.end(), j, [](const Edge& e, std::size_t c) { return e.col < c; });
    return (it != row.end() && it->col == j) ? it->weight : 0.0;
  }

  Matrix to_dense() const {
    Matrix w(size(), size());
    for (std::size_t i = 0; i < size(); ++i)
      for (const Edge& e : neighbors(i)) w(i, e.col) = e.weight;
    return w;
  }

  /// True when every vertex is reachable from vertex 0 through edges of
  /// positive weight.
  bool is_connected() const {
    if (size() == 0) return true;
    std::vector<char> seen(size(), 0);
    std::deque<std::size_t> queue{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      for (const Edge& e : neighbors(v)) {
        if (e.weight > 0.0 && !seen[e.col]) {
          seen[e.col] = 1;
          ++reached;
          queue.push_back(e.col);
        }
      }
    }
    return reached == size();
  }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<Edge> edges_;
  std::vector<double> degrees_;
};

enum class Symmetrization { Mean, Max };

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return s;
}

/// K nearest other points of every point, closest first; ties go to the
/// lower index. Returns (squared distance, index) pairs.
inline std::vector<std::vector<std::pair<double, std::size_t>>> nearest_neighbors(const Matrix& points,
                                                                                  std::size_t k) {
  const std::size_t n = points.rows();
  detail::require(k >= 1, ErrorKind::InvalidArgument, "K must be positive");
  detail::require(n >= 2 && k <= n - 1, ErrorKind::KTooLarge,
                  "K=" + std::to_string(k) + " needs at least " + std::to_string(k + 1) + " points, got " +
                      std::to_string(n));
  std::vector<std::vector<std::pair<double, std::size_t>>> out(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> row;
    row.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.emplace_back(squared_distance(points.row(i), points.row(j)), j);
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
    row.resize(k);
    out[i] = std::move(row);
  }, 16);
  return out;
}

}  // namespace detail

/// Distance from each point to its K-th nearest other point, floored at 1e-12.
inline std::vector<double> knn_distances(const Matrix& points, std::size_t k) {
  const auto nn = detail::nearest_neighbors(points, k);
  std::vector<double> out(nn.size());
  for (std::size_t i = 0; i < nn.size(); ++i) out[i] = std::max(std::sqrt(nn[i].back().first), kDistanceFloor);
  return out;
}

/// Sparse kNN graph with the self-tuning kernel
///   w_ij = exp(-4 |p_i - p_j|^2 / d_K(p_i)^2)
/// evaluated for j among the K nearest neighbours of i, then symmetrized.
inline WeightedGraph build_weight_graph(const Matrix& points, std::size_t k = kDefaultNeighbors,
                                        Symmetrization sym = Symmetrization::Mean) {
  const auto nn = detail::nearest_neighbors(points, k);
  const std::size_t n = points.rows();

  std::vector<std::vector<WeightedGraph::Edge>> directed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dk = std::max(std::sqrt(nn[i].back().first), kDistanceFloor);
    const double scale = dk * dk;
    directed[i].reserve(k);
    for (auto [dist2, j] : nn[i]) directed[i].push_back({j, std::exp(-4.0 * dist2 / scale)});
    std::sort(directed[i].begin(), directed[i].end(),
              [](const WeightedGraph::Edge& a, const WeightedGraph::Edge& b) { return a.col < b.col; });
  }
  auto lookup = [&](std::size_t i, std::size_t j) {
    const auto& r = directed[i];
    auto it = std::lower_bound(r.begin(), r.end(), j,
                               [](const WeightedGraph::Edge& e, std::size_t c) { return e.col < c; });
    return (it != r.end() && it->col == j) ? it->weight : -1.0;
  };

  // Each unordered pair is evaluated once and written to both rows.
  std::vector<std::vector<WeightedGraph::Edge>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& e : directed[i]) {
      const std::size_t j = e.col;
      double back = lookup(j, i);
      if (back >= 0.0 && j < i) continue;  // already emitted from row j
      back = std::max(back, 0.0);
      const double w = sym == Symmetrization::Mean ? 0.5 * (e.weight + back) : std::max(e.weight, back);
      rows[i].push_back({j, w});
      rows[j].push_back({i, w});
    }
  }
  return WeightedGraph(std::move(rows));
}

/// (D - W) X without forming L.
inline Matrix laplacian_apply(const WeightedGraph& graph, const Matrix& x) {
  detail::require(x.rows() == graph.size(), ErrorKind::DimensionMismatch,
                  "laplacian_apply: X has " + std::to_string(x.rows()) + " rows, graph has " +
                      std::to_string(graph.size()) + " vertices");
  Matrix out(x.rows(), x.cols());
  const auto deg = graph.degrees();
  parallel_for(graph.size(), [&](std::size_t i) {
    auto o = out.row(i);
    const auto xi = x.row(i);
    for (std::size_t c = 0; c < x.cols(); ++c) o[c] = deg[i] * xi[c];
    for (const auto& e : graph.neighbors(i)) {
      const auto xj = x.row(e.col);
      for (std::size_t c = 0; c < x.cols(); ++c) o[c] -= e.weight * xj[c];
    }
  }, 256);
  return out;
}

}  // namespace poissonseg
