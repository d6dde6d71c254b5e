#pragma once

#include <stdexcept>
#include <string>

namespace spcp {

// Raised when inputs violate a documented precondition (bad dimensions,
// negative radii, malformed files).
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when an iterative method cannot produce an answer at all, e.g. a
// root-finding bracket collapses. Solvers that merely hit their iteration
// cap report it through their result status instead.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spcp
