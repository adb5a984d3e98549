#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace regrom {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::Vector2d;
using Eigen::VectorXd;
using Eigen::VectorXi;
using MatrixX2d = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Base class for all regrom errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point fell outside the domain of a map or field.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Newton inversion of an element map did not converge.
class InversionError : public Error {
 public:
  using Error::Error;
};

/// Malformed file, config, or argument.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A solver or factorization failed, or data is numerically unusable.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent geometric construction (corner mismatch, bad tables).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

inline double wrap_unit_centered(double t) {
  // maps t to [-1/2, 1/2) by 1-periodicity, as mod(t + 1/2, 1) - 1/2
  double m = t + 0.5;
  m -= std::floor(m);
  return m - 0.5;
}

}  // namespace regrom
