#include <hetsync/decoupling.hpp>
#include <hetsync/errors.hpp>
#include <hetsync/random.hpp>
#include <hetsync/rate.hpp>
#include <hetsync/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hetsync {

bool DecomposedSystem::satisfies_hypothesis() const {
  return kappa * spectral_radius(a_star) < 1.0 && spectral_radius(a_stable) < 1.0;
}

DecomposedTrajectory simulate_decomposed(const DecomposedSystem& system, const Vector& x0,
                                         std::size_t horizon, double overflow_limit) {
  const Eigen::Index m = system.unstable_dim();
  const Eigen::Index k = system.stable_dim();
  if (system.a_star.cols() != m || system.a_stable.cols() != k) {
    throw InvalidArgument("diagonal blocks must be square");
  }
  if (x0.size() != m + k) throw InvalidArgument("initial state does not match the block sizes");

  DecomposedTrajectory traj;
  traj.y.reserve(horizon + 1);
  traj.z.reserve(horizon + 1);
  Vector y = x0.head(m);
  Vector z = x0.tail(k);
  traj.y.push_back(y);
  traj.z.push_back(z);
  traj.z_norm.push_back(z.norm());
  for (std::size_t t = 0; t < horizon; ++t) {
    Vector y_next = system.a_star * y;
    Vector z_next = system.a_stable * z;
    if (system.perturbation) {
      const BlockPerturbation p = system.perturbation(t);
      if (p.p1.rows() != m || p.p1.cols() != m || p.p2.rows() != m || p.p2.cols() != k ||
          p.p3.rows() != k || p.p3.cols() != m || p.p4.rows() != k || p.p4.cols() != k) {
        throw InvalidArgument("perturbation blocks do not conform at step " + std::to_string(t));
      }
      y_next += p.p1 * y + p.p2 * z;
      z_next += p.p3 * y + p.p4 * z;
    }
    y = std::move(y_next);
    z = std::move(z_next);
    if (!(std::max(y.norm(), z.norm()) <= overflow_limit)) {
      throw OverflowError("decomposed state exceeded the overflow limit at step " +
                              std::to_string(t + 1),
                          t + 1);
    }
    traj.y.push_back(y);
    traj.z.push_back(z);
    traj.z_norm.push_back(z.norm());
  }
  return traj;
}

DecayCertificate check_decay(std::span<const double> z_norm, double r,
                             std::optional<std::size_t> tail_start, double slack) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("check_decay: need 0 < r < 1");
  if (z_norm.empty()) throw InvalidArgument("check_decay: empty sequence");
  DecayCertificate cert;
  cert.rate = r;
  cert.tail_start = tail_start.value_or(z_norm.size() / 3);

  std::vector<double> ratio(z_norm.size());
  const double log_r = std::log(r);
  for (std::size_t t = 0; t < z_norm.size(); ++t) {
    ratio[t] = z_norm[t] > 0.0 ? std::exp(std::log(z_norm[t]) - static_cast<double>(t) * log_r) : 0.0;
  }
  const auto peak = std::max_element(ratio.begin(), ratio.end());
  cert.empirical_sup = *peak;
  cert.sup_index = static_cast<std::size_t>(peak - ratio.begin());
  const auto cutoff = static_cast<std::size_t>(0.9 * static_cast<double>(z_norm.size()));
  cert.bounded = std::isfinite(cert.empirical_sup) && (cert.sup_index < cutoff || z_norm.size() < 10);
  cert.tail_nonincreasing = envelope_nonincreasing(ratio, cert.tail_start, slack);
  cert.passed = cert.bounded && cert.tail_nonincreasing;
  return cert;
}

ProductRatio perturbed_product_ratio(const Matrix& a, const std::function<Matrix(std::size_t)>& perturbation,
                          double eps, std::size_t horizon) {
  if (a.rows() == 0 || a.rows() != a.cols()) throw InvalidArgument("perturbed_product_ratio: A must be square");
  if (!(eps > 0.0)) throw InvalidArgument("perturbed_product_ratio: eps must be positive");
  const double denom = spectral_radius(a) + eps;
  ProductRatio out;
  out.ratios.reserve(horizon + 1);
  // Keep the product pre-divided by denom^t so it never overflows.
  Matrix scaled = Matrix::Identity(a.rows(), a.cols());
  out.ratios.push_back(1.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    Matrix step = a;
    if (perturbation) step += perturbation(t);
    scaled = (step * scaled) / denom;
    out.ratios.push_back(operator_norm(scaled));
  }
  const auto peak = std::max_element(out.ratios.begin(), out.ratios.end());
  out.sup = *peak;
  out.argmax = static_cast<std::size_t>(peak - out.ratios.begin());
  return out;
}

std::vector<double> forced_recurrence(GeometricForcing forcing,
                                    const std::function<double(std::size_t)>& lambda, double a0,
                                    std::size_t horizon) {
  std::vector<double> a;
  a.reserve(horizon + 1);
  a.push_back(a0);
  double power = 1.0;  // base^t
  for (std::size_t t = 0; t < horizon; ++t) {
    a.push_back(forcing.scale * power + lambda(t) * a.back());
    power *= forcing.base;
  }
  return a;
}

DecayCertificate forced_recurrence_bound(GeometricForcing forcing,
                              const std::function<double(std::size_t)>& lambda,
                              double lambda_limit, double a0, double r, std::size_t horizon) {
  if (!(std::max(forcing.base, lambda_limit) < r && r < 1.0)) {
    throw InvalidArgument("forced_recurrence_bound: need max(beta, lambda) < r < 1");
  }
  return check_decay(forced_recurrence(forcing, lambda, a0, horizon), r);
}

DecouplingTrial make_decoupling_trial(std::uint64_t seed) {
  Rng rng(seed);
  const int m = rng.integer(1, 3);
  const int k = rng.integer(1, 4);

  auto draw_scaled = [&rng](int n, double target) {
    for (;;) {
      Matrix a = rng.matrix(n, n);
      if (spectral_radius(a) >= 1e-8) return with_spectral_radius(a, target);
    }
  };

  DecouplingTrial trial;
  trial.seed = seed;
  trial.rho_star = rng.uniform(1.0, 2.0);
  trial.rho_stable = rng.uniform(0.3, 0.9);
  DecomposedSystem& sys = trial.system;
  sys.a_star = draw_scaled(m, trial.rho_star);
  sys.a_stable = draw_scaled(k, trial.rho_stable);
  sys.kappa = rng.uniform(0.2, 0.95) / trial.rho_star;
  sys.bound = rng.uniform(0.5, 2.0);

  const Matrix dir1 = unit_norm(rng.matrix(m, m));
  const Matrix dir2 = unit_norm(rng.matrix(m, k));
  const Matrix dir3 = unit_norm(rng.matrix(k, m));
  const Matrix dir4 = unit_norm(rng.matrix(k, k));
  const double amp1 = rng.uniform(0.05, 0.5);
  const double amp2 = rng.uniform(0.05, 0.5);
  const double amp4 = rng.uniform(0.05, 0.5);
  const double kappa = sys.kappa;
  const double bound = sys.bound;
  // Only P3 decays geometrically; the other blocks merely tend to zero.
  sys.perturbation = [=](std::size_t t) {
    const double slow = 1.0 / static_cast<double>(t + 1);
    return BlockPerturbation{amp1 * slow * dir1, amp2 * slow * dir2,
                             bound * std::pow(kappa, static_cast<double>(t)) * dir3,
                             amp4 * slow * dir4};
  };
  trial.x0 = rng.vector(m + k);
  trial.rate_tested = std::max(trial.rho_stable, kappa * trial.rho_star) + 0.03;
  return trial;
}

DecouplingTrial make_violating_trial(double rate_tested) {
  DecouplingTrial trial;
  trial.seed = 0;
  trial.rho_star = 2.0;
  trial.rho_stable = 0.5;
  DecomposedSystem& sys = trial.system;
  sys.a_star = Matrix::Constant(1, 1, 2.0);
  sys.a_stable = Matrix::Constant(1, 1, 0.5);
  sys.kappa = 0.6;
  sys.bound = 1.0;
  sys.perturbation = [](std::size_t t) {
    return BlockPerturbation{Matrix::Zero(1, 1), Matrix::Zero(1, 1),
                             Matrix::Constant(1, 1, std::pow(0.6, static_cast<double>(t))),
                             Matrix::Zero(1, 1)};
  };
  trial.x0 = Vector::Ones(2);
  trial.rate_tested = rate_tested;
  return trial;
}

TrialOutcome run_trial(const DecouplingTrial& trial, std::size_t horizon) {
  TrialOutcome out;
  out.seed = trial.seed;
  out.rho_stable = trial.rho_stable;
  out.rho_star = trial.rho_star;
  out.kappa = trial.system.kappa;
  out.rate_tested = trial.rate_tested;
  out.hypothesis = trial.system.satisfies_hypothesis();
  try {
    const DecomposedTrajectory traj = simulate_decomposed(trial.system, trial.x0, horizon);
    const DecayCertificate cert = check_decay(traj.z_norm, trial.rate_tested);
    out.sup_ratio = cert.empirical_sup;
    out.passed = cert.passed;
  } catch (const OverflowError&) {
    out.sup_ratio = std::numeric_limits<double>::infinity();
    out.passed = false;
  }
  return out;
}

std::vector<TrialOutcome> run_decouple_suite(std::uint64_t seed, std::size_t n_trials,
                                             std::size_t horizon) {
  if (n_trials == 0) throw InvalidArgument("decouple suite needs at least one trial");
  std::vector<TrialOutcome> out;
  out.reserve(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i) {
    out.push_back(run_trial(make_decoupling_trial(seed + i), horizon));
  }
  return out;
}

}  // namespace hetsync
