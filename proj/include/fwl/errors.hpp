#pragma once

#include <stdexcept>
#include <string>

namespace fwl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A grid or scan would exceed the configured node budget.
struct CapacityError : Error {
  using Error::Error;
};

// An integrand produced a non-finite value; the message carries the node.
struct EvaluationError : Error {
  using Error::Error;
};

// A requested region escapes the quadrature box; the message names the R
// that would be required.
struct TruncationError : Error {
  using Error::Error;
};

// Invalid parameters, incompatible operands, or a malformed JSON config.
struct ConfigError : Error {
  using Error::Error;
};

// A test-function support came out empty; callers should raise the cutoff m.
struct DegenerateTestError : Error {
  using Error::Error;
};

}  // namespace fwl
