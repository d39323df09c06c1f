#pragma once

#include <stdexcept>
#include <string>

namespace thrnn {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// An exponent left the range where exp() is representable; the parameters
// producing it are diverging.
class NumericOverflow : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace thrnn
