#pragma once

#include <stdexcept>

namespace gwp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative routine hit its iteration cap or could not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Requested moment does not exist (rho <= order).
class InfiniteMomentError : public Error {
 public:
  using Error::Error;
};

/// Quantile search exceeded its term cap (heavy tail, small rho).
class QuantileOverflowError : public Error {
 public:
  using Error::Error;
};

/// Vector arguments of incompatible length.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Mark, axis or cell index out of range, or duplicated where distinct
/// indices are required.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Collections that must share a grid do not.
class HeterogeneityError : public Error {
 public:
  using Error::Error;
};

/// Not enough observations for the requested estimator.
class InsufficientSampleError : public Error {
 public:
  using Error::Error;
};

}  // namespace gwp
