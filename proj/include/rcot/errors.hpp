#pragma once

#include <stdexcept>
#include <string>

namespace rcot {

// Error categories used across the library. Everything derives from
// std::runtime_error so callers can catch coarsely or by kind.

// Shape or index disagreement between tensors, matrices, or vectors.
struct dimension_error : std::runtime_error {
  explicit dimension_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A precondition on argument values was violated (empty batch, bad range, ...).
struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input is outside the mathematical domain of the operation (non-SPD matrix).
struct domain_error : std::runtime_error {
  explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

// An API was called against its stated contract (wrong cost kind, ...).
struct contract_error : std::runtime_error {
  explicit contract_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical consistency check failed (non-finite data, imaginary residue).
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation requires state that was never established (backward before forward).
struct state_error : std::runtime_error {
  explicit state_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loss became non-finite.
struct divergence_error : std::runtime_error {
  explicit divergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Persistence failure (corrupt checkpoint, unwritable path, bad config file).
struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rcot
