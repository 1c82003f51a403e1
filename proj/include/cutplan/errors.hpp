#pragma once

#include <stdexcept>

namespace cutplan {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Vector or matrix sizes disagree with the order or the network dims.
struct DimensionError : Error {
  using Error::Error;
};

// Input data violates a domain invariant (bad order, bad config value).
struct ValidationError : Error {
  using Error::Error;
};

// A section is not executable: board overrun, empty marker, bad ply count.
struct ConstraintError : Error {
  using Error::Error;
};

// decode_action was asked to act with nothing left to produce.
struct NoActionError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  using Error::Error;
};

// Exhaustive search refused: state space or node budget exceeded.
struct BudgetError : Error {
  using Error::Error;
};

// Malformed input file; message carries line/field context.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace cutplan
