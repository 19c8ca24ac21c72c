#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fxts {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected input: wrong dimensions, out-of-range gains, malformed data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Bad configuration file or selector.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The robust law was asked to run with min(alpha) <= eta_bar.
class GainConditionViolated : public Error {
 public:
  using Error::Error;
};

/// A map was evaluated at a point where it is undefined (e.g. F1 at a
/// critical point with zero regularization).
class SingularEvaluation : public Error {
 public:
  using Error::Error;
};

/// A reference oracle did not converge or its certificate failed.
class OracleFailure : public Error {
 public:
  using Error::Error;
};

/// Estimation network violates its structural invariants.
class InvalidNetwork : public Error {
 public:
  using Error::Error;
};

/// Non-finite state derivative during integration. Carries the time and the
/// last finite state so callers can report where the run diverged.
class NumericalBlowup : public Error {
 public:
  NumericalBlowup(const std::string& what, double t, Eigen::VectorXd x)
      : Error(what), time_(t), state_(std::move(x)) {}

  double time() const { return time_; }
  const Eigen::VectorXd& state() const { return state_; }

 private:
  double time_;
  Eigen::VectorXd state_;
};

}  // namespace fxts
