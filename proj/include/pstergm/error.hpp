#pragma once

#include <stdexcept>
#include <string>

namespace pstergm {

// Root of every exception thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files, out-of-range indices, invariant violations in data.
struct DataError : Error {
  using Error::Error;
};

// A statistic or model specification that cannot be bound to the data.
struct SpecError : Error {
  using Error::Error;
};

// A transition pair where both processes moved the same dyad.
struct UnidentifiableDyad : Error {
  UnidentifiableDyad(std::size_t i, std::size_t j, const std::string& what)
      : Error(what), row(i), col(j) {}
  std::size_t row;
  std::size_t col;
};

// Covariance or information matrix that cannot be inverted.
struct SingularMatrix : Error {
  using Error::Error;
};

}  // namespace pstergm
