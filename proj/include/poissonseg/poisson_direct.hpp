#pragma once

// Dense reference solver for L R = Q^T. Needs Eigen; the rest of the
// library does not.

#include <Eigen/Dense>

#include "poissonseg/poisson.hpp"

namespace poissonseg {

inline constexpr std::size_t kDirectSolveLimit = 2000;

/// Minimum-norm least-squares solve of the singular Laplacian system,
/// shifted so that Σ_i d_i R[i,:] = 0.
inline PropagationResult poisson_solve_direct(const WeightedGraph& graph, const LabelSource& source) {
  const std::size_t n = graph.size();
  detail::require(n <= kDirectSolveLimit, ErrorKind::TooLargeForDirect,
                  "direct solve limited to " + std::to_string(kDirectSolveLimit) + " vertices, got " +
                      std::to_string(n));
  detail::check_solvable(graph, source);

  const auto k = static_cast<Eigen::Index>(source.class_count());
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nn, nn);
  const auto deg = graph.degrees();
  for (std::size_t i = 0; i < n; ++i) {
    lap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = deg[i];
    for (const auto& e : graph.neighbors(i))
      lap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.col)) -= e.weight;
  }
  Eigen::MatrixXd rhs(nn, k);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index c = 0; c < k; ++c)
      rhs(i, c) = source.transposed()(static_cast<std::size_t>(i), static_cast<std::size_t>(c));

  const Eigen::MatrixXd sol = lap.completeOrthogonalDecomposition().solve(rhs);

  Matrix r(n, source.class_count());
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index c = 0; c < k; ++c) r(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) = sol(i, c);

  PropagationResult result;
  detail::warn_if_degenerate(source, result.warnings);
  result.solution = degree_center(graph, std::move(r));
  result.stop = StopReason::Direct;
  return result;
}

}  // namespace poissonseg
