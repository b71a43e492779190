#pragma once

#include <stdexcept>
#include <string>

namespace collabrep {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameter, shape mismatch or inconsistent configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable input data (CSV cells, dictionary files, I/O).
class DataError : public Error {
 public:
  using Error::Error;
};

// A computation produced non-finite values or failed a numerical postcondition.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace collabrep
