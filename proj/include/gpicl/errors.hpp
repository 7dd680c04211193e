#pragma once

#include <stdexcept>
#include <string>

namespace gpicl {

// Invalid argument values or violated preconditions.
struct InputDomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Factorization / quadrature / optimization breakdowns.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Endpoint communication failures after retry exhaustion.
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing keys in replay stores and similar.
struct LookupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad command-line flags or config files; maps to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gpicl
