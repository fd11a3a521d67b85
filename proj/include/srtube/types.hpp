#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace srtube {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error hierarchy. The C API maps each class onto a stable error code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ChartExit : public NumericalError {
 public:
  ChartExit(double time, const std::string& what)
      : NumericalError(what), exit_time_(time) {}
  double exit_time() const { return exit_time_; }

 private:
  double exit_time_;
};

class StepLimit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CharacteristicPoint : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TooCloseToPatch : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace srtube
