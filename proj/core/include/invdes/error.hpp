#pragma once

#include <stdexcept>
#include <string>

namespace invdes {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or argument contract violated by a caller.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Numeric domain violation (log of a nonpositive value, out-of-range geometry, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace invdes
