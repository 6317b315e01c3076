#pragma once

#include <stdexcept>
#include <string>

namespace jeit {

// Shape or dimension mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Violated precondition of a public operation.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct TokenizationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct AnnotationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad configuration value or unknown configuration key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or malformed file on disk.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace jeit
