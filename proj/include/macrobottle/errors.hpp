#pragma once

#include <stdexcept>
#include <string>

namespace macrobottle {

// Base of every library error. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Backward pass requested on something that was not recorded on the tape.
class TapeError : public Error {
 public:
  using Error::Error;
};

// Malformed, misaligned or empty input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN losses, degenerate bandwidths, undefined statistics.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace macrobottle
