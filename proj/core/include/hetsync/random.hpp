#pragma once

#include <hetsync/types.hpp>

#include <cstdint>
#include <random>

namespace hetsync {

// mt19937_64 with a fixed 53-bit mantissa mapping, so a seed produces the
// same doubles on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Integer in [lo, hi].
  int integer(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0);
  Vector vector(Eigen::Index n, double lo = -1.0, double hi = 1.0);

 private:
  std::mt19937_64 engine_;
};

/// Rescales a so that rho(a) == target. Throws NumericalError when rho(a) < 1e-8.
Matrix with_spectral_radius(const Matrix& a, double target);

/// Rescales a to unit operator norm (zero stays zero).
Matrix unit_norm(const Matrix& a);

}  // namespace hetsync
