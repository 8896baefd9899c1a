#include <hetsync/errors.hpp>
#include <hetsync/simulator.hpp>
#include <hetsync/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace hetsync {

AgentEnsemble::AgentEnsemble(std::span<const Matrix> initial_dynamics,
                             std::span<const Vector> initial_states, const Vector& input)
    : input_(input) {
  const std::size_t n = initial_dynamics.size();
  if (n == 0) throw InvalidArgument("ensemble needs at least one agent");
  if (initial_states.size() != n) throw InvalidArgument("one initial state per agent is required");
  const Eigen::Index p = input.size();
  if (p == 0) throw InvalidArgument("state dimension must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (initial_dynamics[i].rows() != p || initial_dynamics[i].cols() != p) {
      throw InvalidArgument("dynamics of agent " + std::to_string(i) + " is not p x p");
    }
    if (initial_states[i].size() != p) {
      throw InvalidArgument("state of agent " + std::to_string(i) + " has wrong length");
    }
  }

  average_ = hetsync::average_dynamics(initial_dynamics);
  offsets_.reserve(n);
  for (const Matrix& s : initial_dynamics) offsets_.push_back(s - average_);

  mean_ = Vector::Zero(p);
  for (const Vector& x : initial_states) mean_ += x;
  mean_ /= static_cast<double>(n);
  deviations_.resize(static_cast<Eigen::Index>(n), p);
  for (std::size_t i = 0; i < n; ++i) {
    deviations_.row(static_cast<Eigen::Index>(i)) = (initial_states[i] - mean_).transpose();
  }
}

std::vector<Matrix> AgentEnsemble::dynamics() const {
  std::vector<Matrix> out;
  out.reserve(offsets_.size());
  for (const Matrix& d : offsets_) out.push_back(average_ + d);
  return out;
}

Vector AgentEnsemble::state(std::size_t i) const {
  return mean_ + deviations_.row(static_cast<Eigen::Index>(i)).transpose();
}

std::vector<Vector> AgentEnsemble::states() const {
  std::vector<Vector> out;
  out.reserve(agents());
  for (std::size_t i = 0; i < agents(); ++i) out.push_back(state(i));
  return out;
}

double AgentEnsemble::sync_error() const {
  return deviations_.rowwise().norm().maxCoeff();
}

double AgentEnsemble::dynamics_deviation() const {
  double worst = 0.0;
  for (const Matrix& d : offsets_) worst = std::max(worst, operator_norm(d));
  return worst;
}

void AgentEnsemble::check_laplacian(const Matrix& laplacian) const {
  const auto n = static_cast<Eigen::Index>(agents());
  if (laplacian.rows() != n || laplacian.cols() != n) {
    throw InvalidArgument("Laplacian size does not match the number of agents");
  }
}

void AgentEnsemble::step_dynamics(const Matrix& laplacian, double c) {
  check_laplacian(laplacian);
  const std::size_t n = agents();
  // sum_j a_ij (S_j - S_i) = -sum_j l_ij S_j = -sum_j l_ij D_j since rows of L sum to zero.
  std::vector<Matrix> next(n);
  Matrix drift = Matrix::Zero(dim(), dim());
  for (std::size_t i = 0; i < n; ++i) {
    Matrix coupling = Matrix::Zero(dim(), dim());
    for (std::size_t j = 0; j < n; ++j) {
      const double l = laplacian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (l != 0.0) coupling -= l * offsets_[j];
    }
    next[i] = offsets_[i] + c * coupling;
    drift += next[i];
  }
  // The mean of the offsets is zero exactly; remove rounding so it cannot accumulate.
  drift /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) offsets_[i] = next[i] - drift;
}

void AgentEnsemble::step_states(const Matrix& laplacian, std::span<const RowVector> gains) {
  check_laplacian(laplacian);
  const std::size_t n = agents();
  if (gains.size() != n) throw InvalidArgument("one gain per agent is required");
  for (const RowVector& k : gains) {
    if (k.size() != dim()) throw InvalidArgument("gain length must equal the state dimension");
  }

  // Row i of -L E is sum_j a_ij (xi_j - xi_i); the mean cancels.
  const Matrix neighbour = -laplacian * deviations_;
  Matrix next(deviations_.rows(), deviations_.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Vector e = deviations_.row(row).transpose();
    const double u = gains[i].dot(neighbour.row(row));
    const Vector y = average_ * e + offsets_[i] * mean_ + offsets_[i] * e + input_ * u;
    next.row(row) = y.transpose();
  }
  const Vector shift = next.colwise().mean().transpose();
  mean_ = average_ * mean_ + shift;
  deviations_ = next.rowwise() - shift.transpose();
}

void AgentEnsemble::advance(const Matrix& laplacian, const ProtocolDesign& design) {
  std::vector<RowVector> gains;
  gains.reserve(agents());
  for (std::size_t i = 0; i < agents(); ++i) gains.push_back(design.gain_for(dynamics(i)));
  step_states(laplacian, gains);
  step_dynamics(laplacian, design.coupling);
  ++time_;
}

namespace {

void record(Trajectory& traj, const AgentEnsemble& e) {
  traj.sync_error.push_back(e.sync_error());
  traj.dynamics_deviation.push_back(e.dynamics_deviation());
  traj.mean_state.push_back(e.mean_state());
  traj.state_offsets.push_back(e.state_offsets());
}

double largest_state_norm(const AgentEnsemble& e) {
  return (e.state_offsets().rowwise() + e.mean_state().transpose()).rowwise().norm().maxCoeff();
}

}  // namespace

Trajectory simulate(const Matrix& laplacian, AgentEnsemble ensemble, const ProtocolDesign& design,
                    const SimulationOptions& options) {
  if (options.horizon == 0) throw InvalidArgument("horizon must be at least 1");
  Trajectory traj;
  traj.sync_error.reserve(options.horizon + 1);
  record(traj, ensemble);
  for (std::size_t t = 1; t <= options.horizon; ++t) {
    ensemble.advance(laplacian, design);
    const double size = largest_state_norm(ensemble);
    if (!(size <= options.overflow_limit)) {
      throw OverflowError("state norm exceeded " + std::to_string(options.overflow_limit) +
                              " at step " + std::to_string(t),
                          t);
    }
    record(traj, ensemble);
  }
  return traj;
}

Trajectory simulate(const WeightedGraph& graph, std::span<const Matrix> initial_dynamics,
                    std::span<const Vector> initial_states, const Vector& input,
                    const ProtocolDesign& design, const SimulationOptions& options) {
  if (graph.size() != initial_dynamics.size()) {
    throw InvalidArgument("graph size does not match the number of agents");
  }
  return simulate(build_laplacian(graph), AgentEnsemble(initial_dynamics, initial_states, input),
                  design, options);
}

DisagreementTransform DisagreementTransform::standard(std::size_t n_agents) {
  if (n_agents == 0) throw InvalidArgument("transform needs at least one agent");
  const auto n = static_cast<Eigen::Index>(n_agents);
  Matrix basis(n, n);
  basis.col(0) = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::Index filled = 1;
  for (Eigen::Index k = 0; k < n && filled < n; ++k) {
    Vector v = Vector::Unit(n, k);
    for (Eigen::Index m = 0; m < filled; ++m) v -= basis.col(m).dot(v) * basis.col(m);
    const double norm = v.norm();
    if (norm < 1e-8) continue;
    basis.col(filled++) = v / norm;
  }
  return DisagreementTransform(std::move(basis));
}

DisagreementTransform DisagreementTransform::spectral(const LaplacianSpectrum& spec) {
  return DisagreementTransform(spec.basis);
}

Matrix DisagreementTransform::kron(Eigen::Index p) const {
  const Eigen::Index n = basis_.rows();
  Matrix t = Matrix::Zero(n * p, n * p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      t.block(i * p, j * p, p, p) = basis_(i, j) * Matrix::Identity(p, p);
    }
  }
  return t;
}

Disagreement disagreement(std::span<const Vector> states, const DisagreementTransform& transform) {
  const auto n = static_cast<Eigen::Index>(transform.agents());
  if (static_cast<Eigen::Index>(states.size()) != n || n == 0) {
    throw InvalidArgument("state count does not match the transform");
  }
  const Eigen::Index p = states.front().size();
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = states[static_cast<std::size_t>(i)].transpose();
  // [sigma^T; zeta_1^T; ...] = basis^T X, since T is orthogonal.
  const Matrix coords = transform.basis().transpose() * x;
  Disagreement out;
  out.sigma = coords.row(0).transpose();
  out.zeta.resize((n - 1) * p);
  for (Eigen::Index k = 1; k < n; ++k) out.zeta.segment((k - 1) * p, p) = coords.row(k).transpose();
  return out;
}

Disagreement disagreement(const Vector& mean, const Matrix& offsets,
                          const DisagreementTransform& transform) {
  const Eigen::Index n = offsets.rows();
  const Eigen::Index p = offsets.cols();
  if (n != static_cast<Eigen::Index>(transform.agents()) || mean.size() != p) {
    throw InvalidArgument("offsets do not match the transform");
  }
  const Matrix& basis = transform.basis();
  Disagreement out;
  out.sigma = std::sqrt(static_cast<double>(n)) * mean +
              (basis.col(0).transpose() * offsets).transpose();
  out.zeta.resize((n - 1) * p);
  for (Eigen::Index k = 1; k < n; ++k) {
    out.zeta.segment((k - 1) * p, p) = (basis.col(k).transpose() * offsets).transpose();
  }
  return out;
}

Disagreement disagreement(const Trajectory& trajectory, std::size_t t,
                          const DisagreementTransform& transform) {
  return disagreement(trajectory.mean_state.at(t), trajectory.state_offsets.at(t), transform);
}

Vector reconstruct(const Disagreement& coords, const DisagreementTransform& transform) {
  const Eigen::Index p = coords.sigma.size();
  Vector stacked(coords.sigma.size() + coords.zeta.size());
  stacked << coords.sigma, coords.zeta;
  return transform.kron(p) * stacked;
}

Matrix limit_closed_loop(const Matrix& laplacian, const ProtocolDesign& design) {
  const Eigen::Index n = laplacian.rows();
  const Eigen::Index p = design.average.rows();
  const Matrix bk = design.input * design.limit_gain;
  Matrix out(n * p, n * p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Matrix block = -laplacian(i, j) * bk;
      if (i == j) block += design.average;
      out.block(i * p, j * p, p, p) = block;
    }
  }
  return out;
}

Matrix closed_loop_perturbation(const AgentEnsemble& ensemble, const Matrix& laplacian,
                                const ProtocolDesign& design) {
  const auto n = static_cast<Eigen::Index>(ensemble.agents());
  const Eigen::Index p = ensemble.dim();
  if (laplacian.rows() != n) throw InvalidArgument("Laplacian size does not match the ensemble");
  // K_i - K_inf = gain_for(D_i) because the gain is linear in S_i.
  Matrix out = Matrix::Zero(n * p, n * p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix& d = ensemble.dynamics_offset(static_cast<std::size_t>(i));
    const Matrix b_dk = ensemble.input() * design.gain_for(d);
    for (Eigen::Index j = 0; j < n; ++j) {
      Matrix block = -laplacian(i, j) * b_dk;
      if (i == j) block += d;
      out.block(i * p, j * p, p, p) = block;
    }
  }
  return out;
}

}  // namespace hetsync
