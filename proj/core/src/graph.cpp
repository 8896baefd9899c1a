#include <hetsync/errors.hpp>
#include <hetsync/graph.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace hetsync {

const char* condition_name(Condition c) noexcept {
  switch (c) {
    case Condition::connectivity: return "connectivity";
    case Condition::stabilizable: return "stabilizability of (S_inf, B)";
    case Condition::unstable_average: return "rho(S_inf) >= 1";
    case Condition::product_gap: return "unstable product gap";
    case Condition::coupling: return "coupling strength";
    case Condition::eta: return "eta";
  }
  return "unknown";
}

WeightedGraph WeightedGraph::from_adjacency(const Matrix& weights, double symmetry_tol) {
  if (weights.rows() == 0 || weights.rows() != weights.cols()) {
    throw InvalidArgument("adjacency must be a nonempty square matrix");
  }
  if (!weights.allFinite()) throw InvalidArgument("adjacency has non-finite entries");
  const Eigen::Index n = weights.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights(i, i) != 0.0) {
      throw InvalidArgument("adjacency diagonal must be zero (node " + std::to_string(i) + ")");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (weights(i, j) < 0.0) {
        throw InvalidArgument("negative weight at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }
      if (std::abs(weights(i, j) - weights(j, i)) > symmetry_tol) {
        throw InvalidArgument("adjacency is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }
    }
  }
  // Store the exactly symmetric part so downstream code can rely on a_ij == a_ji.
  Matrix sym = 0.5 * (weights + weights.transpose());
  return WeightedGraph(std::move(sym));
}

WeightedGraph WeightedGraph::from_edges(std::size_t n_nodes, std::span<const Edge> edges) {
  if (n_nodes == 0) throw InvalidArgument("graph needs at least one node");
  const auto n = static_cast<Eigen::Index>(n_nodes);
  Matrix w = Matrix::Zero(n, n);
  for (const Edge& e : edges) {
    if (e.from >= n_nodes || e.to >= n_nodes) throw InvalidArgument("edge endpoint out of range");
    if (e.from == e.to) throw InvalidArgument("self loops are not allowed");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw InvalidArgument("edge weights must be finite and nonnegative");
    }
    const auto i = static_cast<Eigen::Index>(e.from);
    const auto j = static_cast<Eigen::Index>(e.to);
    if (w(i, j) != 0.0 && w(i, j) != e.weight) {
      throw InvalidArgument("conflicting weights for edge (" + std::to_string(e.from) + ", " +
                            std::to_string(e.to) + ")");
    }
    w(i, j) = e.weight;
    w(j, i) = e.weight;
  }
  return from_adjacency(w);
}

double LaplacianSpectrum::algebraic_connectivity() const {
  return eigenvalues.size() > 1 ? eigenvalues(1) : 0.0;
}

Matrix build_laplacian(const WeightedGraph& graph) {
  const Matrix& a = graph.weights();
  Matrix l = -a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double degree = 0.0;
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      if (k != i) degree += a(i, k);
    }
    l(i, i) = degree;
  }
  return l;
}

namespace {

void validate_laplacian(const Matrix& l) {
  if (l.rows() == 0 || l.rows() != l.cols()) {
    throw InvalidArgument("Laplacian must be a nonempty square matrix");
  }
  if (!l.allFinite()) throw InvalidArgument("Laplacian has non-finite entries");
  const double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  if ((l - l.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("Laplacian is not symmetric");
  }
  if (l.rowwise().sum().cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("Laplacian rows must sum to zero");
  }
}

}  // namespace

LaplacianSpectrum spectrum(const Matrix& laplacian) {
  validate_laplacian(laplacian);
  const Eigen::Index n = laplacian.rows();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(laplacian);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");

  Vector values = solver.eigenvalues();
  const Matrix& vectors = solver.eigenvectors();

  // The nullspace basis is arbitrary; rebuild it so the first column is the
  // normalized ones vector and the rest of the nullspace is orthogonal to it.
  const double zero_tol = 1e-9 * std::max(1.0, std::abs(values(n - 1)));
  Eigen::Index null_dim = 1;
  while (null_dim < n && std::abs(values(null_dim)) <= zero_tol) ++null_dim;

  const Vector ones = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Matrix basis(n, n);
  basis.col(0) = ones;

  if (null_dim > 1) {
    Matrix rest = vectors.leftCols(null_dim);
    rest -= ones * (ones.transpose() * rest);
    Eigen::ColPivHouseholderQR<Matrix> qr(rest);
    Matrix q = qr.householderQ() * Matrix::Identity(n, null_dim - 1);
    // Re-project for orthogonality to the ones vector after the QR round trip.
    q -= ones * (ones.transpose() * q);
    for (Eigen::Index k = 0; k < q.cols(); ++k) {
      for (Eigen::Index m = 0; m < k; ++m) q.col(k) -= q.col(m).dot(q.col(k)) * q.col(m);
      q.col(k).normalize();
    }
    basis.middleCols(1, null_dim - 1) = q;
  }
  if (null_dim < n) {
    Matrix rest = vectors.rightCols(n - null_dim);
    rest -= ones * (ones.transpose() * rest);
    for (Eigen::Index k = 0; k < rest.cols(); ++k) rest.col(k).normalize();
    basis.rightCols(n - null_dim) = rest;
  }

  values.head(null_dim).setZero();
  return LaplacianSpectrum{laplacian, values, basis};
}

double default_connectivity_tol(const LaplacianSpectrum& spec) {
  return 1e-9 * std::max(1.0, std::abs(spec.largest()));
}

bool is_connected(const LaplacianSpectrum& spec, std::optional<double> tol) {
  if (spec.size() <= 1) return true;
  return spec.algebraic_connectivity() > tol.value_or(default_connectivity_tol(spec));
}

}  // namespace hetsync
