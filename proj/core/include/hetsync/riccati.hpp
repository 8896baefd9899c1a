#pragma once

#include <hetsync/types.hpp>

namespace hetsync {

// Modified discrete Riccati inequality
//   P - S^T P S + (1 - eta^2) S^T P B B^T P S / (B^T P B) > 0
// for a single-input pair (S, B).
struct RiccatiProblem {
  Matrix dynamics;  // S, p x p
  Vector input;     // B, length p
  double eta = 0.0;
};

struct RiccatiWitness {
  Matrix P;
  double residual_min_eig = 0.0;  // smallest eigenvalue of the inequality's left side
  int iterations = 0;
};

struct RiccatiVerdict {
  bool holds = false;
  double residual_min_eig = 0.0;
  double p_min_eig = 0.0;
};

struct RiccatiOptions {
  double tol = 1e-10;  // relative step size for the fixed-point iteration
  int max_iter = 10000;
};

/// Left side of the inequality, symmetrized. Throws InvalidArgument when
/// B^T P B <= 0 or dimensions disagree.
Matrix riccati_lhs(const Matrix& P, const Matrix& S, const Vector& B, double eta);

/// P > 0 and lhs min eigenvalue > tol * trace(P).
RiccatiVerdict verify_riccati(const Matrix& P, const RiccatiProblem& problem, double tol = 1e-10);

/// Iterates P <- S^T P S - (1 - eta^2) S^T P B B^T P S / (B^T P B) + e I from
/// P = I, with e = 1e-2 * ||S||^2. A fixed point satisfies lhs(P) = e I.
///
/// Throws InvalidArgument if eta is outside [0, 1/unstable_product(S)),
/// ConvergenceError if the iteration stalls or the result fails verification.
RiccatiWitness solve_modified_riccati(const RiccatiProblem& problem, const RiccatiOptions& options = {});

}  // namespace hetsync
