#ifndef MLGIBBS_ERRORS_HPP
#define MLGIBBS_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mlgibbs {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates a documented precondition.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// An Euler iterate left the finite range. Usually means the step size is
/// above the stability threshold of the potential.
class NumericalOverflow : public Error {
 public:
  NumericalOverflow(std::int64_t step_index, int level = -1)
      : Error(make_message(step_index, level)), step_index_(step_index), level_(level) {}

  std::int64_t step_index() const { return step_index_; }
  /// Estimator level at which the overflow happened, or -1 outside the estimator.
  int level() const { return level_; }

  NumericalOverflow at_level(int level) const { return NumericalOverflow(step_index_, level); }

 private:
  static std::string make_message(std::int64_t step, int level) {
    std::string msg = "non-finite Euler iterate at step " + std::to_string(step);
    if (level >= 0) msg += " (level " + std::to_string(level) + ")";
    return msg;
  }

  std::int64_t step_index_;
  int level_;
};

/// An iterative numerical procedure (minimizer search) did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A calibration produced parameters the estimator cannot run with.
class InfeasibleCalibration : public Error {
 public:
  using Error::Error;
};

/// A reference-value oracle (quadrature, long-run chain) failed.
class OracleFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace mlgibbs

#endif  // MLGIBBS_ERRORS_HPP
