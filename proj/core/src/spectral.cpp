#include <hetsync/errors.hpp>
#include <hetsync/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace hetsync {

namespace {

void require_square(const Matrix& a, const char* what) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw InvalidArgument(std::string(what) + ": expected a nonempty square matrix");
  }
  if (!a.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entries");
}

// Swap diagonal entries k and k+1 of the upper triangular t, updating u so
// that u * t * u^H is unchanged.
void swap_adjacent(ComplexMatrix& t, ComplexMatrix& u, Eigen::Index k) {
  const Complex t11 = t(k, k);
  const Complex t22 = t(k + 1, k + 1);
  const Complex t12 = t(k, k + 1);
  const Complex dx = t22 - t11;
  const double r = std::hypot(std::abs(t12), std::abs(dx));
  if (r == 0.0) return;
  // First column of the rotation is the eigenvector of t22 in the 2x2 block.
  const Complex a = t12 / r;
  const Complex b = dx / r;
  Eigen::Matrix2cd z;
  z << a, -std::conj(b), b, std::conj(a);

  t.middleRows(k, 2) = z.adjoint() * t.middleRows(k, 2);
  t.middleCols(k, 2) = t.middleCols(k, 2) * z;
  u.middleCols(k, 2) = u.middleCols(k, 2) * z;
  t(k + 1, k) = 0.0;
  t(k, k) = t22;
  t(k + 1, k + 1) = t11;
}

// Single-linkage clusters of the diagonal of t with threshold tol.
std::vector<int> cluster_labels(const ComplexMatrix& t, double tol) {
  const auto n = static_cast<int>(t.rows());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      x = parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    }
    return x;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(t(i, i) - t(j, j)) < tol) parent[static_cast<std::size_t>(find(i))] = find(j);
    }
  }
  // Label clusters by order of first appearance.
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<int> root_label(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (root_label[static_cast<std::size_t>(root)] < 0) root_label[static_cast<std::size_t>(root)] = next++;
    label[static_cast<std::size_t>(i)] = root_label[static_cast<std::size_t>(root)];
  }
  return label;
}

// Solves t11 * x - x * t22 = c for upper triangular t11, t22 with disjoint spectra.
ComplexMatrix solve_triangular_sylvester(const ComplexMatrix& t11, const ComplexMatrix& t22,
                                         const ComplexMatrix& c) {
  const Eigen::Index k = t11.rows();
  const Eigen::Index m = t22.rows();
  ComplexMatrix x(k, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    ComplexVector rhs = c.col(j);
    for (Eigen::Index i = 0; i < j; ++i) rhs += x.col(i) * t22(i, j);
    ComplexMatrix shifted = t11;
    shifted.diagonal().array() -= t22(j, j);
    x.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return x;
}

// Entry (i, j) scaled by d^(level_j - level_i), i.e. D^{-1} M D with
// D = diag(d^level).
ComplexMatrix level_scaled(const ComplexMatrix& m, double d, const std::vector<int>& level) {
  ComplexMatrix out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const int e = level[static_cast<std::size_t>(j)] - level[static_cast<std::size_t>(i)];
      if (e != 0) out(i, j) *= std::pow(d, static_cast<double>(e));
    }
  }
  return out;
}

// A unitary change of basis inside one cluster plus an integer level per
// basis vector; scaling by d^level compresses everything above the levels.
struct ClusterBasis {
  ComplexMatrix w;
  std::vector<int> level;
};

// Levels follow the position in the triangular block.
ClusterBasis positional_basis(Eigen::Index k) {
  ClusterBasis b{ComplexMatrix::Identity(k, k), std::vector<int>(static_cast<std::size_t>(k))};
  std::iota(b.level.begin(), b.level.end(), 0);
  return b;
}

// Staircase reduction of block - mu I: level j collects the directions that
// the shifted block maps into levels < j, found as numerical null vectors of
// the trailing part. A cluster made of several Jordan blocks for one
// eigenvalue then needs only as many levels as its largest block, instead
// of one level per position.
std::optional<ClusterBasis> staircase_basis(const ComplexMatrix& block) {
  const Eigen::Index k = block.rows();
  const Complex mu = block.trace() / static_cast<double>(k);
  const ComplexMatrix nil = block - mu * ComplexMatrix::Identity(k, k);
  const double tol = 1e-9 * std::max(1.0, operator_norm(nil));

  ClusterBasis b{ComplexMatrix::Identity(k, k), std::vector<int>(static_cast<std::size_t>(k), 0)};
  Eigen::Index pos = 0;
  int lev = 0;
  while (pos < k) {
    const Eigen::Index r = k - pos;
    const ComplexMatrix m = b.w.adjoint() * nil * b.w;
    Eigen::JacobiSVD<ComplexMatrix> svd(m.bottomRightCorner(r, r), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index nullity = 0;
    while (nullity < r && sv(r - 1 - nullity) <= tol) ++nullity;
    if (nullity == 0) return std::nullopt;
    // Null directions first, the rest after; both orthonormal.
    ComplexMatrix v(r, r);
    v.leftCols(nullity) = svd.matrixV().rightCols(nullity);
    v.rightCols(r - nullity) = svd.matrixV().leftCols(r - nullity);
    b.w.rightCols(r) = (b.w.rightCols(r) * v).eval();
    for (Eigen::Index i = pos; i < pos + nullity; ++i) b.level[static_cast<std::size_t>(i)] = lev;
    pos += nullity;
    ++lev;
  }
  return b;
}

// Largest d in (0, 1] with ||D^{-1} M D|| < goal, or nothing if d would
// push log cond(D) past max_log_cond.
std::optional<double> fit_scale(const ComplexMatrix& m, const std::vector<int>& level, double goal,
                                double max_log_cond) {
  const int span = *std::max_element(level.begin(), level.end());
  if (operator_norm(m) < goal) return 1.0;
  if (span == 0) return std::nullopt;
  double lo = 0.5;
  double hi = 1.0;
  while (operator_norm(level_scaled(m, lo, level)) >= goal) {
    hi = lo;
    lo *= 0.5;
    if (-std::log(lo) * static_cast<double>(span) > max_log_cond) return std::nullopt;
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (operator_norm(level_scaled(m, mid, level)) < goal) lo = mid;
    else hi = mid;
  }
  return lo;
}

}  // namespace

ComplexVector eigenvalues(const Matrix& a) {
  require_square(a, "eigenvalues");
  Eigen::EigenSolver<Matrix> solver(a, false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed to converge");
  return solver.eigenvalues();
}

double spectral_radius(const Matrix& a) {
  return eigenvalues(a).cwiseAbs().maxCoeff();
}

double operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double operator_norm(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  return svd.singularValues()(0);
}

double unstable_product(const Matrix& a) {
  double product = 1.0;
  for (const Complex& lambda : eigenvalues(a)) {
    const double modulus = std::abs(lambda);
    if (modulus >= kUnstableModulus) product *= modulus;
  }
  return product;
}

ShrinkSimilarity shrink_similarity(const Matrix& a, double eps, const ShrinkOptions& options) {
  require_square(a, "shrink_similarity");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("shrink_similarity: eps must be positive");

  const Eigen::Index n = a.rows();
  const double rho = spectral_radius(a);
  ShrinkSimilarity out;
  out.target = rho + eps;
  const double goal = rho + (1.0 - options.headroom) * eps;

  if (operator_norm(a) < goal) {
    out.transform = ComplexMatrix::Identity(n, n);
    out.inverse = ComplexMatrix::Identity(n, n);
    out.transformed = a.cast<Complex>();
    out.transformed_norm = operator_norm(a);
    return out;
  }

  Eigen::ComplexSchur<ComplexMatrix> schur(a.cast<Complex>());
  if (schur.info() != Eigen::Success) throw NumericalError("complex Schur decomposition failed");
  ComplexMatrix t = schur.matrixT();
  ComplexMatrix u = schur.matrixU();
  t.triangularView<Eigen::StrictlyLower>().setZero();

  // Make every eigenvalue cluster contiguous along the diagonal.
  std::vector<int> label = cluster_labels(t, options.cluster_fraction * eps);
  for (Eigen::Index pass = 0; pass < n; ++pass) {
    bool swapped = false;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      auto& lk = label[static_cast<std::size_t>(k)];
      auto& lk1 = label[static_cast<std::size_t>(k + 1)];
      if (lk > lk1) {
        swap_adjacent(t, u, k);
        std::swap(lk, lk1);
        swapped = true;
      }
    }
    if (!swapped) break;
  }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks;  // [start, end)
  for (Eigen::Index k = 0; k < n;) {
    Eigen::Index e = k + 1;
    while (e < n && label[static_cast<std::size_t>(e)] == label[static_cast<std::size_t>(k)]) ++e;
    blocks.emplace_back(k, e);
    k = e;
  }

  // Decouple each cluster from everything after it. Rows above the current
  // cluster are already zero in its columns, so only the coupling block changes.
  ComplexMatrix y = ComplexMatrix::Identity(n, n);
  for (const auto& [s, e] : blocks) {
    if (e == n) break;
    const Eigen::Index k = e - s;
    const Eigen::Index m = n - e;
    const ComplexMatrix x = solve_triangular_sylvester(
        t.block(s, s, k, k), t.block(e, e, m, m), -t.block(s, e, k, m));
    if (!x.allFinite()) throw NumericalError("shrink_similarity: cluster decoupling failed");
    // y <- y * [[I, x], [0, I]] on the trailing index range.
    y.block(0, e, n, m) += y.block(0, s, n, k) * x;
    t.block(s, e, k, m).setZero();
  }

  const double y_cond = [&] {
    Eigen::JacobiSVD<ComplexMatrix> svd(y);
    const auto& sv = svd.singularValues();
    return sv(0) / sv(sv.size() - 1);
  }();
  if (!(y_cond <= options.condition_cap)) {
    throw NumericalError("shrink_similarity: cluster decoupling exceeds the conditioning cap");
  }

  Vector scale = Vector::Ones(n);
  ComplexMatrix w = ComplexMatrix::Identity(n, n);
  ComplexMatrix transformed = ComplexMatrix::Zero(n, n);
  double norm = 0.0;
  const double max_log_cond = std::log(options.condition_cap / y_cond);
  for (const auto& [s, e] : blocks) {
    const Eigen::Index k = e - s;
    const ComplexMatrix block = t.block(s, s, k, k);
    ClusterBasis basis = positional_basis(k);
    std::optional<double> d = fit_scale(block, basis.level, goal, max_log_cond);
    if (!d) {
      if (std::optional<ClusterBasis> stair = staircase_basis(block)) {
        const ComplexMatrix rotated = stair->w.adjoint() * block * stair->w;
        d = fit_scale(rotated, stair->level, goal, max_log_cond);
        if (d) basis = std::move(*stair);
      }
    }
    if (!d) {
      throw NumericalError("shrink_similarity: eps too small for the conditioning cap "
                           "(cond(Q) would exceed " + std::to_string(options.condition_cap) + ")");
    }
    const ComplexMatrix scaled = level_scaled(basis.w.adjoint() * block * basis.w, *d, basis.level);
    for (Eigen::Index i = 0; i < k; ++i) {
      scale(s + i) = std::pow(*d, static_cast<double>(basis.level[static_cast<std::size_t>(i)]));
    }
    w.block(s, s, k, k) = basis.w;
    transformed.block(s, s, k, k) = scaled;
    norm = std::max(norm, operator_norm(scaled));
  }

  const ComplexVector scale_c = scale.cast<Complex>();
  out.transform = u * y * w * scale_c.asDiagonal();
  const ComplexMatrix y_inv =
      y.triangularView<Eigen::UnitUpper>().solve(ComplexMatrix::Identity(n, n));
  out.inverse = scale_c.cwiseInverse().asDiagonal() * (w.adjoint() * y_inv * u.adjoint());
  out.transformed = std::move(transformed);
  out.transformed_norm = norm;
  {
    Eigen::JacobiSVD<ComplexMatrix> svd(out.transform);
    const auto& sv = svd.singularValues();
    out.condition = sv(0) / sv(sv.size() - 1);
  }
  if (!(out.condition <= options.condition_cap)) {
    throw NumericalError("shrink_similarity: cond(Q) exceeds the conditioning cap");
  }
  if (!(out.transformed_norm < out.target)) {
    throw NumericalError("shrink_similarity: could not reach rho(A) + eps");
  }
  return out;
}

}  // namespace hetsync
