#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ava {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files, bad dataset shapes.
class DataError : public Error {
 public:
  using Error::Error;
};

// An operation was requested that the predictor cannot provide.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Iterative solver or trainer failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Invalid arguments or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ava
