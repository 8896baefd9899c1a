#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hetsync {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: wrong dimensions, asymmetric weights, out-of-range parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : NumericalError(what), iterations_(iterations), residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class OverflowError : public NumericalError {
 public:
  OverflowError(const std::string& what, std::size_t step)
      : NumericalError(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

enum class Condition { connectivity, stabilizable, unstable_average, product_gap, coupling, eta };

const char* condition_name(Condition c) noexcept;

// A synchronization precondition does not hold for the given problem data.
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(Condition which, const std::string& what)
      : Error(what), which_(which) {}

  Condition which() const noexcept { return which_; }

 private:
  Condition which_;
};

}  // namespace hetsync
