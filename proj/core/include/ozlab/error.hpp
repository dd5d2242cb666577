#pragma once

#include <stdexcept>
#include <string>

namespace oz {

// Bad input: malformed configs, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// An algorithm ran but did not deliver (non-convergence, bracket failure).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace oz
