#pragma once

#include <hetsync/types.hpp>

#include <cstddef>
#include <optional>
#include <span>

namespace hetsync {

struct Edge {
  std::size_t from;
  std::size_t to;
  double weight;
};

/// Undirected communication graph with nonnegative edge weights a_ij.
///
/// Construction validates symmetry, a zero diagonal and nonnegativity;
/// an instance always satisfies those invariants.
class WeightedGraph {
 public:
  static WeightedGraph from_adjacency(const Matrix& weights, double symmetry_tol = 0.0);
  static WeightedGraph from_edges(std::size_t n_nodes, std::span<const Edge> edges);

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  const Matrix& weights() const noexcept { return weights_; }
  double weight(std::size_t i, std::size_t j) const {
    return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  explicit WeightedGraph(Matrix weights) : weights_(std::move(weights)) {}

  Matrix weights_;
};

/// Ordered Laplacian eigendecomposition L = Q diag(lambda) Q^T.
///
/// eigenvalues are ascending with eigenvalues[0] == 0, and basis.col(0) is
/// exactly 1/sqrt(N) * ones. The remaining columns are orthonormal.
struct LaplacianSpectrum {
  Matrix laplacian;
  Vector eigenvalues;
  Matrix basis;

  std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
  double algebraic_connectivity() const;  // lambda_2, 0 for a single node
  double largest() const { return eigenvalues(eigenvalues.size() - 1); }
};

Matrix build_laplacian(const WeightedGraph& graph);

LaplacianSpectrum spectrum(const Matrix& laplacian);

// Zero test for lambda_2: 1e-9 * max(1, lambda_N).
double default_connectivity_tol(const LaplacianSpectrum& spec);

bool is_connected(const LaplacianSpectrum& spec, std::optional<double> tol = std::nullopt);

}  // namespace hetsync
