#include <hetsync/errors.hpp>
#include <hetsync/random.hpp>
#include <hetsync/spectral.hpp>

namespace hetsync {

Matrix Rng::matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  Matrix m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform(lo, hi);
  }
  return m;
}

Vector Rng::vector(Eigen::Index n, double lo, double hi) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
  return v;
}

Matrix with_spectral_radius(const Matrix& a, double target) {
  const double rho = spectral_radius(a);
  if (rho < 1e-8) throw NumericalError("cannot rescale a (numerically) nilpotent matrix");
  return a * (target / rho);
}

Matrix unit_norm(const Matrix& a) {
  const double n = operator_norm(a);
  return n > 0.0 ? Matrix(a / n) : a;
}

}  // namespace hetsync
