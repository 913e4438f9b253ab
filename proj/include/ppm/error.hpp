#ifndef PPM_ERROR_HPP
#define PPM_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ppm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV rows, timestamps, JSON documents).
class ParseError : public Error {
public:
  explicit ParseError(const std::string& what, std::size_t row = 0)
      : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what),
        row_(row) {}

  /// 1-based row of the offending input line, 0 when not row-related.
  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

/// A precondition on an argument does not hold.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A model is asked for something it was not trained for.
class ModelError : public Error {
public:
  using Error::Error;
};

} // namespace ppm

#endif // PPM_ERROR_HPP
