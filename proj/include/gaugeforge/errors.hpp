#pragma once

#include <stdexcept>
#include <string>

namespace gaugeforge {

// Mismatched (p, d, n, minpoly) between operands.
struct ContextError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An operation was called outside its stated domain.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A truncated model cannot represent the requested result exactly.
// Carries the capacity that would have been needed, when known.
struct TruncationError : std::runtime_error {
  explicit TruncationError(const std::string& msg, long required = -1)
      : std::runtime_error(msg), required_capacity(required) {}
  long required_capacity;
};

}  // namespace gaugeforge
