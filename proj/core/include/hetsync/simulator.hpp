#pragma once

#include <hetsync/graph.hpp>
#include <hetsync/protocol.hpp>
#include <hetsync/types.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace hetsync {

/// State of the coupled agents at one time index.
///
/// Internally each S_i(t) is kept as S_inf + D_i(t) and each xi_i(t) as
/// mean(t) + e_i(t). The updates are the exact algebraic rewrite of
///   xi_i(t+1) = S_i(t) xi_i(t) + B K_i(t) sum_j a_ij (xi_j(t) - xi_i(t))
///   S_i(t+1)  = S_i(t) + c sum_j a_ij (S_j(t) - S_i(t))
/// in these coordinates. Disagreements therefore keep full relative
/// precision while the common mode grows, instead of being lost as the
/// difference of two large numbers.
class AgentEnsemble {
 public:
  AgentEnsemble(std::span<const Matrix> initial_dynamics, std::span<const Vector> initial_states,
                const Vector& input);

  std::size_t agents() const noexcept { return offsets_.size(); }
  Eigen::Index dim() const noexcept { return input_.size(); }
  std::size_t time() const noexcept { return time_; }
  const Vector& input() const noexcept { return input_; }

  const Matrix& average_dynamics() const noexcept { return average_; }
  Matrix dynamics(std::size_t i) const { return average_ + offsets_[i]; }
  const Matrix& dynamics_offset(std::size_t i) const { return offsets_[i]; }  // S_i - S_inf
  std::vector<Matrix> dynamics() const;

  const Vector& mean_state() const noexcept { return mean_; }
  const Matrix& state_offsets() const noexcept { return deviations_; }  // row i: xi_i - mean
  Vector state(std::size_t i) const;
  std::vector<Vector> states() const;

  /// max_i ||xi_i - mean||
  double sync_error() const;
  /// max_i ||S_i - S_inf|| (operator norm)
  double dynamics_deviation() const;

  /// Dynamics averaging step with coupling c. Does not advance time().
  void step_dynamics(const Matrix& laplacian, double c);
  /// State step with one gain row per agent. Does not advance time().
  void step_states(const Matrix& laplacian, std::span<const RowVector> gains);
  /// Gains from the current S_i(t), then states, then dynamics; advances time().
  void advance(const Matrix& laplacian, const ProtocolDesign& design);

 private:
  void check_laplacian(const Matrix& laplacian) const;

  Matrix average_;
  std::vector<Matrix> offsets_;
  Vector mean_;
  Matrix deviations_;
  Vector input_;
  std::size_t time_ = 0;
};

struct Trajectory {
  std::vector<double> sync_error;          // t = 0..horizon
  std::vector<double> dynamics_deviation;  // t = 0..horizon
  std::vector<Vector> mean_state;
  std::vector<Matrix> state_offsets;       // N x p per step

  std::size_t horizon() const noexcept { return sync_error.empty() ? 0 : sync_error.size() - 1; }
  double agent_deviation(std::size_t t, std::size_t i) const {
    return state_offsets[t].row(static_cast<Eigen::Index>(i)).norm();
  }
  Vector state(std::size_t t, std::size_t i) const {
    return mean_state[t] + state_offsets[t].row(static_cast<Eigen::Index>(i)).transpose();
  }
};

struct SimulationOptions {
  std::size_t horizon = 100;
  double overflow_limit = 1e150;
};

/// Runs the closed loop for options.horizon steps. Throws OverflowError with
/// the step index if any ||xi_i|| exceeds options.overflow_limit.
Trajectory simulate(const Matrix& laplacian, AgentEnsemble ensemble, const ProtocolDesign& design,
                    const SimulationOptions& options);

Trajectory simulate(const WeightedGraph& graph, std::span<const Matrix> initial_dynamics,
                    std::span<const Vector> initial_states, const Vector& input,
                    const ProtocolDesign& design, const SimulationOptions& options);

/// T = [1/sqrt(N) 1 | U] (x) I_p and the coordinates xi = T [sigma; zeta].
class DisagreementTransform {
 public:
  /// U from modified Gram-Schmidt of the standard basis against 1/sqrt(N) 1;
  /// the column that becomes dependent is dropped.
  static DisagreementTransform standard(std::size_t n_agents);
  /// U = Laplacian eigenvectors for lambda_2..lambda_N, which block
  /// diagonalizes the limit closed loop.
  static DisagreementTransform spectral(const LaplacianSpectrum& spec);

  const Matrix& basis() const noexcept { return basis_; }
  std::size_t agents() const noexcept { return static_cast<std::size_t>(basis_.rows()); }
  Matrix kron(Eigen::Index p) const;

 private:
  explicit DisagreementTransform(Matrix basis) : basis_(std::move(basis)) {}
  Matrix basis_;
};

struct Disagreement {
  Vector sigma;  // p
  Vector zeta;   // (N - 1) p
};

Disagreement disagreement(std::span<const Vector> states, const DisagreementTransform& transform);
/// Same coordinates from mean/offset form; zeta only sees the offsets.
Disagreement disagreement(const Vector& mean, const Matrix& offsets,
                          const DisagreementTransform& transform);
Disagreement disagreement(const Trajectory& trajectory, std::size_t t,
                          const DisagreementTransform& transform);

/// Stacked state T [sigma; zeta].
Vector reconstruct(const Disagreement& coords, const DisagreementTransform& transform);

/// I_N (x) S_inf - L (x) B K_inf
Matrix limit_closed_loop(const Matrix& laplacian, const ProtocolDesign& design);

/// R(t) = S(t) - I_N (x) S_inf - [H(t)(L (x) I_p) - L (x) B K_inf], built from
/// the ensemble's offsets so it carries no cancellation error.
Matrix closed_loop_perturbation(const AgentEnsemble& ensemble, const Matrix& laplacian,
                                const ProtocolDesign& design);

}  // namespace hetsync
