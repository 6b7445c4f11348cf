#pragma once

#include <stdexcept>
#include <string>

namespace jade {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operator or vector dimensions are inconsistent.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A tuning or configuration parameter is out of range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input data violate a contract (NaN values, counts above reads, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Not enough observed sites to determine the fit.
class UnderdeterminedError : public Error {
 public:
  using Error::Error;
};

// Factorization breakdown or NaN propagation inside a solver.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A rate (TPR/FPR) has no defined denominator.
class UndefinedRateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace jade
