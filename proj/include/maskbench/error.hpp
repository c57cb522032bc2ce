#pragma once

#include <stdexcept>
#include <string>

namespace maskbench {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or unwritable files.
struct IoError : Error {
  using Error::Error;
};

// Shapes, headers or row counts that do not line up.
struct StructuralError : Error {
  using Error::Error;
};

// Content that violates a data invariant (non-finite observed value, bad flag).
struct ValidationError : Error {
  using Error::Error;
};

// Caller passed arguments outside an operation's preconditions.
struct ArgumentError : Error {
  using Error::Error;
};

}  // namespace maskbench
