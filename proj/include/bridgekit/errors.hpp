#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bridgekit {

/// Argument outside the domain of an operation (t <= 0, state off the support, bad time ordering).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate, double error_estimate)
      : std::runtime_error(what), estimate_(estimate), error_estimate_(error_estimate) {}

  double estimate() const noexcept { return estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double estimate_;
  double error_estimate_;
};

class RejectionBudgetExceeded : public std::runtime_error {
 public:
  RejectionBudgetExceeded(const std::string& what, double acceptance_rate)
      : std::runtime_error(what), acceptance_rate_(acceptance_rate) {}

  double acceptance_rate() const noexcept { return acceptance_rate_; }

 private:
  double acceptance_rate_;
};

/// Two kernels cannot be compared because their reference measures cannot be converted.
class MeasureMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MissingGridPointError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GridMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InsufficientSampleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The (psi, lambda) handed to a chain h-transform is not an eigenpair of the generator.
class EigenPreconditionError : public std::invalid_argument {
 public:
  EigenPreconditionError(const std::string& what, double residual)
      : std::invalid_argument(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// lambda_s / s was not constant along the s-grid during single-bridge recovery.
class LinearityViolationError : public std::runtime_error {
 public:
  LinearityViolationError(const std::string& what, double spread)
      : std::runtime_error(what), spread_(spread) {}
  double spread() const noexcept { return spread_; }

 private:
  double spread_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

}  // namespace bridgekit
