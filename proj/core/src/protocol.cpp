#include <hetsync/errors.hpp>
#include <hetsync/protocol.hpp>
#include <hetsync/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hetsync {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void check_dimensions(std::span<const Matrix> dynamics, const Vector& B) {
  if (dynamics.empty()) throw InvalidArgument("need at least one dynamics matrix");
  const Eigen::Index p = dynamics.front().rows();
  for (const Matrix& s : dynamics) {
    if (s.rows() != p || s.cols() != p || p == 0) {
      throw InvalidArgument("dynamics matrices must all be p x p");
    }
  }
  if (B.size() != p) throw InvalidArgument("B length must equal the state dimension");
}

}  // namespace

const char* witness_source_name(WitnessSource s) noexcept {
  switch (s) {
    case WitnessSource::solver: return "solver";
    case WitnessSource::supplied: return "supplied";
    case WitnessSource::none: return "none";
  }
  return "none";
}

Matrix average_dynamics(std::span<const Matrix> dynamics) {
  if (dynamics.empty()) throw InvalidArgument("average_dynamics: empty list");
  const Matrix& first = dynamics.front();
  Matrix sum = Matrix::Zero(first.rows(), first.cols());
  for (const Matrix& s : dynamics) {
    if (s.rows() != first.rows() || s.cols() != first.cols()) {
      throw InvalidArgument("average_dynamics: mismatched dimensions");
    }
    sum += s;
  }
  return sum / static_cast<double>(dynamics.size());
}

bool is_stabilizable(const Matrix& S, const Vector& B) {
  const Eigen::Index p = S.rows();
  if (S.cols() != p || B.size() != p) throw InvalidArgument("is_stabilizable: dimension mismatch");
  for (const Complex& lambda : eigenvalues(S)) {
    if (std::abs(lambda) < kUnstableModulus) continue;
    ComplexMatrix pbh(p, p + 1);
    pbh.leftCols(p) = lambda * ComplexMatrix::Identity(p, p) - S.cast<Complex>();
    pbh.col(p) = B.cast<Complex>();
    Eigen::JacobiSVD<ComplexMatrix> svd(pbh);
    const auto& sv = svd.singularValues();
    const double threshold = 1e-8 * sv(0);
    const auto rank = (sv.array() > threshold).count();
    if (rank < p) return false;
  }
  return true;
}

AssumptionReport check_assumptions(std::span<const Matrix> dynamics, const Vector& B,
                                   const LaplacianSpectrum& spec) {
  check_dimensions(dynamics, B);
  const Matrix s_inf = average_dynamics(dynamics);
  AssumptionReport report;
  report.stabilizable = is_stabilizable(s_inf, B);
  report.spectral_radius = spectral_radius(s_inf);
  report.unstable_average = report.spectral_radius >= 1.0;
  report.lhs_value = 1.0 / unstable_product(s_inf);
  const double l2 = spec.algebraic_connectivity();
  const double ln = spec.largest();
  report.rhs_value = (ln + l2) > 0.0 ? (ln - l2) / (ln + l2) : 1.0;
  report.product_gap = report.lhs_value > report.rhs_value;
  return report;
}

CouplingChoice coupling_interval(double rho_inf, double lambda2, double lambdaN) {
  if (!(lambda2 > 0.0) || lambdaN < lambda2) {
    throw InvalidArgument("coupling_interval: need lambda_N >= lambda_2 > 0");
  }
  if (!(rho_inf > 0.0)) throw InvalidArgument("coupling_interval: rho must be positive");
  CouplingChoice choice;
  choice.interval.lower = (1.0 - 1.0 / rho_inf) / lambda2;
  choice.interval.upper = (1.0 + 1.0 / rho_inf) / lambdaN;
  choice.optimal = 2.0 / (lambda2 + lambdaN);
  if (choice.interval.empty() || !choice.interval.contains(choice.optimal)) {
    throw AssumptionViolation(Condition::product_gap,
                              "admissible coupling interval is empty: (" +
                                  fmt(choice.interval.lower) + ", " + fmt(choice.interval.upper) + ")");
  }
  return choice;
}

double contraction_factor(double c, double lambda2, double lambdaN) {
  return std::max(std::abs(1.0 - c * lambda2), std::abs(1.0 - c * lambdaN));
}

RowVector design_gain(const Matrix& S_i, const Vector& B, const Matrix& P, double lambda2,
                      double lambdaN) {
  const Eigen::Index p = S_i.rows();
  if (S_i.cols() != p || B.size() != p || P.rows() != p || P.cols() != p) {
    throw InvalidArgument("design_gain: dimension mismatch");
  }
  const RowVector bp = B.transpose() * P;
  const double bpb = bp.dot(B);
  if (!(bpb > 0.0)) throw InvalidArgument("design_gain: B^T P B must be positive");
  return (2.0 / (lambda2 + lambdaN) / bpb) * (bp * S_i);
}

double rate_bound(const Matrix& S_inf, const Vector& B, const RowVector& K_inf, double c,
                  const LaplacianSpectrum& spec) {
  const double l2 = spec.algebraic_connectivity();
  const double ln = spec.largest();
  double r = spectral_radius(S_inf) * contraction_factor(c, l2, ln);
  const Matrix bk = B * K_inf;
  for (std::size_t j = 1; j < spec.size(); ++j) {
    const double lambda = spec.eigenvalues(static_cast<Eigen::Index>(j));
    r = std::max(r, spectral_radius(S_inf - lambda * bk));
  }
  return r;
}

RowVector ProtocolDesign::gain_for(const Matrix& S_i) const {
  if (gain_scale == 0.0) return RowVector::Zero(S_i.cols());
  const RowVector bp = input.transpose() * riccati_P;
  return (gain_scale / bp.dot(input)) * (bp * S_i);
}

ProtocolDesign design_protocol(std::span<const Matrix> initial_dynamics, const Vector& B,
                               const LaplacianSpectrum& spec, const DesignOptions& options) {
  check_dimensions(initial_dynamics, B);
  const Eigen::Index p = B.size();

  ProtocolDesign d;
  d.average = average_dynamics(initial_dynamics);
  d.input = B;
  d.limit_gain = RowVector::Zero(p);

  if (spec.size() == 1) {
    // A lone agent has no neighbours; there is nothing to synchronize.
    d.coupling = options.coupling.value_or(0.0);
    d.rate_bound = 0.0;
    d.stable_case = spectral_radius(d.average) < 1.0;
    return d;
  }
  if (!is_connected(spec)) {
    throw AssumptionViolation(Condition::connectivity,
                              "communication graph is disconnected (lambda_2 = " +
                                  fmt(spec.algebraic_connectivity()) + ")");
  }
  d.lambda2 = spec.algebraic_connectivity();
  d.lambdaN = spec.largest();

  const AssumptionReport report = check_assumptions(initial_dynamics, B, spec);

  if (!report.unstable_average) {
    d.stable_case = true;
    d.coupling_interval = OpenInterval{0.0, 2.0 / d.lambdaN};
    d.coupling = options.coupling.value_or(2.0 / (d.lambda2 + d.lambdaN));
    if (!d.coupling_interval.contains(d.coupling)) {
      throw AssumptionViolation(Condition::coupling,
                                "coupling " + fmt(d.coupling) + " outside (0, 2/lambda_N)");
    }
    d.contraction = contraction_factor(d.coupling, d.lambda2, d.lambdaN);
    d.rate_bound = rate_bound(d.average, B, d.limit_gain, d.coupling, spec);
    return d;
  }

  if (!report.stabilizable) {
    throw AssumptionViolation(Condition::stabilizable, "(S_inf, B) is not stabilizable");
  }
  if (!report.product_gap) {
    throw AssumptionViolation(Condition::product_gap,
                              "1/prod|unstable eigenvalues| = " + fmt(report.lhs_value) +
                                  " does not exceed (lambda_N - lambda_2)/(lambda_N + lambda_2) = " +
                                  fmt(report.rhs_value));
  }

  const CouplingChoice choice = coupling_interval(report.spectral_radius, d.lambda2, d.lambdaN);
  d.coupling_interval = choice.interval;
  d.coupling = options.coupling.value_or(choice.optimal);
  if (!choice.interval.contains(d.coupling)) {
    throw AssumptionViolation(Condition::coupling,
                              "coupling " + fmt(d.coupling) + " outside the admissible interval (" +
                                  fmt(choice.interval.lower) + ", " + fmt(choice.interval.upper) + ")");
  }
  d.contraction = contraction_factor(d.coupling, d.lambda2, d.lambdaN);

  // eta must sit in [f(c*), 1/prod|lambda_u|).
  const double eta_low = report.rhs_value;
  const double eta_high = report.lhs_value;
  d.eta = options.eta.value_or(std::max(eta_low, 0.5 * (eta_low + eta_high)));
  if (!(d.eta >= eta_low && d.eta < eta_high)) {
    throw AssumptionViolation(Condition::eta, "eta = " + fmt(d.eta) + " outside [" + fmt(eta_low) +
                                                  ", " + fmt(eta_high) + ")");
  }

  const RiccatiProblem problem{d.average, B, d.eta};
  if (options.riccati_P) {
    const RiccatiVerdict verdict = verify_riccati(*options.riccati_P, problem, options.riccati.tol);
    if (!verdict.holds) {
      throw NumericalError("supplied P does not satisfy the Riccati inequality (min eigenvalue " +
                           fmt(verdict.residual_min_eig) + ")");
    }
    d.riccati_P = 0.5 * (*options.riccati_P + options.riccati_P->transpose());
    d.riccati_residual = verdict.residual_min_eig;
    d.witness = WitnessSource::supplied;
  } else {
    RiccatiWitness witness = solve_modified_riccati(problem, options.riccati);
    d.riccati_P = std::move(witness.P);
    d.riccati_residual = witness.residual_min_eig;
    d.witness = WitnessSource::solver;
  }

  d.gain_scale = 2.0 / (d.lambda2 + d.lambdaN);
  d.limit_gain = design_gain(d.average, B, d.riccati_P, d.lambda2, d.lambdaN);
  d.rate_bound = rate_bound(d.average, B, d.limit_gain, d.coupling, spec);
  return d;
}

}  // namespace hetsync
