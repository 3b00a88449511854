#pragma once

#include <stdexcept>
#include <string>

namespace fpca {

/// Raised when an object cannot be built from otherwise valid inputs
/// (e.g. a numerically singular Gram matrix).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a computed quantity violates a mathematical guarantee by more
/// than rounding can explain.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace fpca
