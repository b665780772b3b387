#pragma once

#include <stdexcept>
#include <string>

namespace mlrde {

// Floating-point breakdown inside an otherwise well-posed computation
// (non-positive innovation variance, failed factorization, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// A sampling plan cannot meet the requested error budget.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mlrde
