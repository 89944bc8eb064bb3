#pragma once

#include <stdexcept>
#include <string>

namespace rrm {

// Bad flags, unknown protocol names, invalid configuration.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input records, missing files, contract violations on data.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses, degenerate statistics.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rrm
