#pragma once

#include <hetsync/types.hpp>

namespace hetsync {

// Eigenvalues with modulus at or above this count as unstable. The unit
// circle itself is included.
inline constexpr double kUnstableModulus = 1.0 - 1e-12;

ComplexVector eigenvalues(const Matrix& a);

/// Maximum eigenvalue modulus of a square matrix.
double spectral_radius(const Matrix& a);

/// Induced 2-norm (largest singular value). Rectangular input is accepted.
double operator_norm(const Matrix& a);
double operator_norm(const ComplexMatrix& a);

/// Product of |lambda| over eigenvalues on or outside the unit circle,
/// counted with multiplicity. Returns 1 when there are none.
double unstable_product(const Matrix& a);

struct ShrinkOptions {
  // Give up once cond(Q) would exceed this.
  double condition_cap = 1e12;
  // The construction aims for rho + (1 - headroom) * eps so that the strict
  // bound survives recomputation of Q^{-1} A Q in floating point.
  double headroom = 0.1;
  // Eigenvalues closer than cluster_fraction * eps are kept in one block and
  // handled by diagonal scaling instead of a Sylvester decoupling.
  double cluster_fraction = 0.5;
};

/// Similarity Q with ||Q^{-1} A Q|| < rho(A) + eps.
struct ShrinkSimilarity {
  ComplexMatrix transform;    // Q
  ComplexMatrix inverse;      // Q^{-1}
  ComplexMatrix transformed;  // Q^{-1} A Q, assembled from the triangular factor
  double transformed_norm = 0.0;
  double target = 0.0;  // rho(A) + eps
  double condition = 1.0;
};

/// Builds Q from a complex Schur form A = U T U^H. Eigenvalue clusters are
/// made contiguous by unitary swaps, separated clusters are decoupled by
/// triangular Sylvester solves, and each cluster block is compressed by a
/// geometric scaling diag(1, d, d^2, ...) with d found by bisection. When
/// that would exceed the cap, a cluster is first reduced to staircase form so
/// the powers of d follow its nilpotent levels rather than diagonal positions.
///
/// Throws InvalidArgument for eps <= 0 and NumericalError when the required
/// conditioning exceeds options.condition_cap.
ShrinkSimilarity shrink_similarity(const Matrix& a, double eps, const ShrinkOptions& options = {});

}  // namespace hetsync
