#pragma once
// Driving vector fields V_1..V_d on R^e, viewed as first-order operators
// V_i g(y) = Dg(y) V_i(y). A field set evaluates composed words
// V_{i1} ... V_{ik} I(y) for word lengths k <= 3, where I is the identity.
// Implementers of nonlinear fields supply these compositions analytically.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlrde/linalg.hpp"

namespace mlrde {

class VectorFieldSet {
 public:
  virtual ~VectorFieldSet() = default;

  virtual std::size_t dimension() const = 0;     // e
  virtual std::size_t driver_count() const = 0;  // d

  // Value of V_{word[0]} V_{word[1]} ... V_{word[k-1]} I at y. Words of
  // length up to 3 must be supported.
  virtual Vector word_value(std::span<const std::size_t> word, const Vector& y) const = 0;

  // Non-null when V_i(y) = A_i y; enables the matrix fast path.
  virtual const std::vector<Matrix>* linear_matrices() const { return nullptr; }
};

// Linear fields V_i(y) = A_i y. Operator composition reverses the matrix
// order: V_{i1} ... V_{ik} I(y) = A_{ik} ... A_{i1} y.
class LinearVectorFields final : public VectorFieldSet {
 public:
  explicit LinearVectorFields(std::vector<Matrix> matrices) : a_(std::move(matrices)) {
    if (a_.empty()) throw std::invalid_argument("LinearVectorFields: no matrices");
    const std::size_t e = a_.front().rows();
    for (const Matrix& m : a_)
      if (m.rows() != e || m.cols() != e)
        throw std::invalid_argument("LinearVectorFields: matrices must be square, equal size");
  }

  std::size_t dimension() const override { return a_.front().rows(); }
  std::size_t driver_count() const override { return a_.size(); }

  Vector word_value(std::span<const std::size_t> word, const Vector& y) const override {
    if (y.size() != dimension())
      throw std::invalid_argument("LinearVectorFields: state dimension mismatch");
    Vector v = y;
    for (std::size_t letter : word) {
      if (letter >= a_.size()) throw std::invalid_argument("LinearVectorFields: bad word letter");
      v = a_[letter].apply(v);
    }
    return v;
  }

  const std::vector<Matrix>* linear_matrices() const override { return &a_; }

  const Matrix& matrix(std::size_t i) const { return a_.at(i); }

 private:
  std::vector<Matrix> a_;
};

}  // namespace mlrde
