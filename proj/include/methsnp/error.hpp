#pragma once

#include <stdexcept>
#include <string>

namespace methsnp {

// Base for all library errors. Subclasses select the CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad command-line usage or configuration (exit 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent input data (exit 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: singular systems, non-finite objectives (exit 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace methsnp
