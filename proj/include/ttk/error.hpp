#pragma once

#include <stdexcept>
#include <string>

namespace ttk {

// Bad input: malformed files, invariant violations, unknown config keys.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure while doing otherwise-valid work: I/O, divergence, size mismatch.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ttk
