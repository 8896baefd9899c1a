#pragma once

#include <hetsync/graph.hpp>
#include <hetsync/riccati.hpp>
#include <hetsync/types.hpp>

#include <optional>
#include <span>

namespace hetsync {

/// Entrywise mean of the agents' initial dynamics matrices, S_inf.
Matrix average_dynamics(std::span<const Matrix> dynamics);

/// PBH test: rank [lambda I - S | B] = p for every eigenvalue with |lambda| >= 1.
/// Rank uses the threshold 1e-8 * ||[lambda I - S | B]||.
bool is_stabilizable(const Matrix& S, const Vector& B);

struct AssumptionReport {
  bool stabilizable = false;     // (S_inf, B) stabilizable
  bool unstable_average = false; // rho(S_inf) >= 1
  bool product_gap = false;      // lhs_value > rhs_value
  double lhs_value = 0.0;        // 1 / unstable_product(S_inf)
  double rhs_value = 0.0;        // (lambda_N - lambda_2) / (lambda_N + lambda_2)
  double spectral_radius = 0.0;  // rho(S_inf)

  bool all() const noexcept { return stabilizable && unstable_average && product_gap; }
};

AssumptionReport check_assumptions(std::span<const Matrix> dynamics, const Vector& B,
                                   const LaplacianSpectrum& spec);

struct OpenInterval {
  double lower = 0.0;
  double upper = 0.0;

  bool empty() const noexcept { return !(lower < upper); }
  bool contains(double x) const noexcept { return lower < x && x < upper; }
  double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

struct CouplingChoice {
  OpenInterval interval;
  double optimal = 0.0;  // 2 / (lambda_2 + lambda_N)
};

/// Admissible couplings ((1 - 1/rho)/lambda_2, (1 + 1/rho)/lambda_N) and the
/// rate-optimal choice. Throws AssumptionViolation(product_gap) when the
/// interval is empty or does not contain the optimum.
CouplingChoice coupling_interval(double rho_inf, double lambda2, double lambdaN);

/// f(c) = max(|1 - c lambda_2|, |1 - c lambda_N|).
double contraction_factor(double c, double lambda2, double lambdaN);

/// K_i = 2/(lambda_2 + lambda_N) * B^T P S_i / (B^T P B).
RowVector design_gain(const Matrix& S_i, const Vector& B, const Matrix& P, double lambda2,
                      double lambdaN);

/// r* = max(rho(S_inf) f(c), max_{j>=2} rho(S_inf - lambda_j B K_inf)).
double rate_bound(const Matrix& S_inf, const Vector& B, const RowVector& K_inf, double c,
                  const LaplacianSpectrum& spec);

enum class WitnessSource { solver, supplied, none };

const char* witness_source_name(WitnessSource s) noexcept;

struct ProtocolDesign {
  Matrix average;  // S_inf
  Vector input;    // B
  double lambda2 = 0.0;
  double lambdaN = 0.0;

  double coupling = 0.0;
  OpenInterval coupling_interval;
  double contraction = 0.0;  // f(c)
  double eta = 0.0;
  Matrix riccati_P;
  WitnessSource witness = WitnessSource::none;
  double riccati_residual = 0.0;
  double gain_scale = 0.0;  // 2 / (lambda_2 + lambda_N), zero when gains are off
  RowVector limit_gain;     // K_inf
  double rate_bound = 0.0;  // r*
  bool stable_case = false; // rho(S_inf) < 1: zero gains, c in (0, 2/lambda_N)

  /// K_i(t) for the current S_i(t). Zero in the stable case.
  RowVector gain_for(const Matrix& S_i) const;
  bool valid() const noexcept { return rate_bound < 1.0; }
};

struct DesignOptions {
  std::optional<double> coupling;
  std::optional<double> eta;
  std::optional<Matrix> riccati_P;  // skip the solver and verify this witness instead
  RiccatiOptions riccati;
};

/// Full design: assumption checks, coupling, Riccati witness, gains and r*.
///
/// Throws AssumptionViolation naming the failed condition (connectivity,
/// stabilizability, product gap, or an out-of-range override); ConvergenceError from the solver.
ProtocolDesign design_protocol(std::span<const Matrix> initial_dynamics, const Vector& B,
                               const LaplacianSpectrum& spec, const DesignOptions& options = {});

}  // namespace hetsync
