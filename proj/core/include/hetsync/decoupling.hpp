#pragma once

#include <hetsync/types.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hetsync {

// Perturbation P_t split conformally with diag(A*, A^s):
//   [ p1 p2 ]
//   [ p3 p4 ]
struct BlockPerturbation {
  Matrix p1;
  Matrix p2;
  Matrix p3;
  Matrix p4;
};

using PerturbationSequence = std::function<BlockPerturbation(std::size_t t)>;

/// X_{t+1} = (diag(A*, A^s) + P_t) X_t with X = (Y, Z).
///
/// kappa and bound record the claimed envelope ||P3_t|| <= bound * kappa^t;
/// they are metadata and are not enforced.
struct DecomposedSystem {
  Matrix a_star;
  Matrix a_stable;
  PerturbationSequence perturbation;  // empty means P_t = 0
  double kappa = 0.0;
  double bound = 0.0;

  Eigen::Index unstable_dim() const noexcept { return a_star.rows(); }
  Eigen::Index stable_dim() const noexcept { return a_stable.rows(); }
  /// kappa * rho(A*) < 1 and rho(A^s) < 1.
  bool satisfies_hypothesis() const;
};

struct DecomposedTrajectory {
  std::vector<Vector> y;
  std::vector<Vector> z;
  std::vector<double> z_norm;
};

DecomposedTrajectory simulate_decomposed(const DecomposedSystem& system, const Vector& x0,
                                         std::size_t horizon, double overflow_limit = 1e150);

/// Finite-horizon check of ||Z_t|| <= M r^t. Passing is evidence, not proof:
/// the bound is asymptotic and only a falsifying run is conclusive.
struct DecayCertificate {
  double rate = 0.0;
  double empirical_sup = 0.0;  // sup_t ||Z_t|| / r^t
  std::size_t sup_index = 0;
  std::size_t tail_start = 0;
  bool bounded = false;        // finite, and the sup is not in the final 10%
  bool tail_nonincreasing = false;
  bool passed = false;
};

/// Default tail_start is a third of the series.
DecayCertificate check_decay(std::span<const double> z_norm, double r,
                             std::optional<std::size_t> tail_start = std::nullopt,
                             double slack = 0.1);

struct ProductRatio {
  double sup = 0.0;
  std::size_t argmax = 0;
  std::vector<double> ratios;  // ||prod_{i<t} (A + P_i)|| / (rho(A) + eps)^t, t = 0..horizon
};

/// Supremum of the normalized transition-matrix norm for A + P_t.
ProductRatio perturbed_product_ratio(const Matrix& a, const std::function<Matrix(std::size_t)>& perturbation,
                          double eps, std::size_t horizon);

// b_t = scale * base^t
struct GeometricForcing {
  double scale = 0.0;
  double base = 0.0;
};

/// a_{t+1} = b_t + lambda_t a_t, t = 0..horizon (the extremal case of the inequality).
std::vector<double> forced_recurrence(GeometricForcing forcing,
                                    const std::function<double(std::size_t)>& lambda, double a0,
                                    std::size_t horizon);

/// Checks a_t / r^t stays bounded over the horizon. Requires
/// max(base, lambda_limit) < r < 1.
DecayCertificate forced_recurrence_bound(GeometricForcing forcing,
                              const std::function<double(std::size_t)>& lambda,
                              double lambda_limit, double a0, double r, std::size_t horizon);

/// One random instance of the decoupling experiment.
struct DecouplingTrial {
  std::uint64_t seed = 0;
  DecomposedSystem system;
  Vector x0;
  double rho_stable = 0.0;
  double rho_star = 0.0;
  double rate_tested = 0.0;
};

/// Instance satisfying the hypothesis: rho(A^s) in [0.3, 0.9], rho(A*) in
/// [1, 2], ||P3_t|| = M kappa^t with kappa rho(A*) <= 0.95, and P1, P2, P4
/// decaying like 1/(t+1). rate_tested = max(rho(A^s), kappa rho(A*)) + 0.03.
DecouplingTrial make_decoupling_trial(std::uint64_t seed);

/// Scalar negative control: A* = 2, A^s = 0.5, P3_t = 0.6^t (kappa rho = 1.2),
/// so Z is pumped by the growing Y and must fail at any r < 1.
DecouplingTrial make_violating_trial(double rate_tested = 0.99);

struct TrialOutcome {
  std::uint64_t seed = 0;
  double rho_stable = 0.0;
  double rho_star = 0.0;
  double kappa = 0.0;
  double rate_tested = 0.0;
  double sup_ratio = 0.0;
  bool passed = false;
  bool hypothesis = false;
};

TrialOutcome run_trial(const DecouplingTrial& trial, std::size_t horizon = 300);

/// Trials use seeds seed, seed + 1, ..., seed + n_trials - 1.
std::vector<TrialOutcome> run_decouple_suite(std::uint64_t seed, std::size_t n_trials,
                                             std::size_t horizon = 300);

}  // namespace hetsync
