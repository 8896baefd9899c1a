#include <hetsync/errors.hpp>
#include <hetsync/riccati.hpp>
#include <hetsync/spectral.hpp>

#include <cmath>
#include <string>

namespace hetsync {

namespace {

void check_shapes(const Matrix& P, const Matrix& S, const Vector& B) {
  const Eigen::Index p = S.rows();
  if (p == 0 || S.cols() != p) throw InvalidArgument("Riccati: S must be square");
  if (B.size() != p) throw InvalidArgument("Riccati: B length must match S");
  if (P.rows() != p || P.cols() != p) throw InvalidArgument("Riccati: P must match S");
}

double min_symmetric_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return solver.eigenvalues()(0);
}

}  // namespace

Matrix riccati_lhs(const Matrix& P, const Matrix& S, const Vector& B, double eta) {
  check_shapes(P, S, B);
  const Vector pb = P * B;
  const double bpb = B.dot(pb);
  if (!(bpb > 0.0)) throw InvalidArgument("Riccati: B^T P B must be positive");
  const Vector spb = S.transpose() * pb;
  Matrix lhs = P - S.transpose() * P * S + ((1.0 - eta * eta) / bpb) * (spb * spb.transpose());
  return 0.5 * (lhs + lhs.transpose());
}

RiccatiVerdict verify_riccati(const Matrix& P, const RiccatiProblem& problem, double tol) {
  check_shapes(P, problem.dynamics, problem.input);
  RiccatiVerdict verdict;
  const Matrix sym = 0.5 * (P + P.transpose());
  verdict.p_min_eig = min_symmetric_eig(sym);
  if (!(verdict.p_min_eig > 0.0)) return verdict;
  verdict.residual_min_eig =
      min_symmetric_eig(riccati_lhs(sym, problem.dynamics, problem.input, problem.eta));
  verdict.holds = verdict.residual_min_eig > tol * sym.trace();
  return verdict;
}

RiccatiWitness solve_modified_riccati(const RiccatiProblem& problem, const RiccatiOptions& options) {
  const Matrix& S = problem.dynamics;
  const Vector& B = problem.input;
  check_shapes(Matrix::Identity(S.rows(), S.rows()), S, B);
  if (!(problem.eta >= 0.0)) throw InvalidArgument("Riccati: eta must be nonnegative");
  const double bound = 1.0 / unstable_product(S);
  if (!(problem.eta < bound)) {
    throw InvalidArgument("Riccati: eta = " + std::to_string(problem.eta) +
                          " violates eta < 1/prod|unstable eigenvalues| = " + std::to_string(bound));
  }

  const Eigen::Index p = S.rows();
  const double shift = 1e-2 * std::pow(operator_norm(S), 2);
  const double gamma = 1.0 - problem.eta * problem.eta;
  const Matrix shift_identity = (shift > 0.0 ? shift : 1e-2) * Matrix::Identity(p, p);

  Matrix P = Matrix::Identity(p, p);
  double step = 0.0;
  for (int k = 1; k <= options.max_iter; ++k) {
    const Vector pb = P * B;
    const double bpb = B.dot(pb);
    if (!(bpb > 0.0)) throw ConvergenceError("Riccati iteration lost B^T P B > 0", k, step);
    const Vector spb = S.transpose() * pb;
    Matrix next = S.transpose() * P * S - (gamma / bpb) * (spb * spb.transpose()) + shift_identity;
    next = (0.5 * (next + next.transpose())).eval();
    if (!next.allFinite()) throw ConvergenceError("Riccati iteration diverged", k, step);
    step = (next - P).norm() / P.norm();
    P = std::move(next);
    if (step <= options.tol) {
      const RiccatiVerdict verdict = verify_riccati(P, problem, options.tol);
      if (!verdict.holds) {
        throw ConvergenceError("Riccati fixed point failed verification", k, verdict.residual_min_eig);
      }
      return RiccatiWitness{P, verdict.residual_min_eig, k};
    }
  }
  throw ConvergenceError("Riccati iteration did not converge within " +
                             std::to_string(options.max_iter) + " iterations",
                         options.max_iter, step);
}

}  // namespace hetsync
