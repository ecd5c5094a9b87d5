#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ispinv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Error tied to a specific pixel.
class PixelError : public Error {
 public:
  PixelError(const std::string& what, std::size_t row, std::size_t col)
      : Error(what + " at pixel (row " + std::to_string(row) + ", col " + std::to_string(col) + ")"),
        row_(row),
        col_(col) {}

  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

}  // namespace ispinv
