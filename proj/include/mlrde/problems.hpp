#pragma once
// Benchmark problems and path functionals.

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>

#include "mlrde/linalg.hpp"
#include "mlrde/scheme.hpp"
#include "mlrde/vector_fields.hpp"

namespace mlrde {

// f(y) = (|y(T)| - 1)^+
inline double functional_f(const GridPath& path) {
  return std::max(norm2(path.terminal()) - 1.0, 0.0);
}

// g(y) = |y(T)| 1{y^1(T) > 0}
inline double functional_g(const GridPath& path) {
  const Vector& y = path.terminal();
  return y[0] > 0.0 ? norm2(y) : 0.0;
}

// First coordinate of the terminal state.
inline double functional_terminal(const GridPath& path) { return path.terminal()[0]; }

using PathFunctional = std::function<double(const GridPath&)>;

struct ProblemSetup {
  std::shared_ptr<const VectorFieldSet> fields;
  Vector y0;
};

// Linear equation on R^3 driven by two antisymmetric matrices; the unit
// sphere is invariant, so |Y_t| = 1 along the exact solution.
inline ProblemSetup sphere_problem() {
  Matrix a1(3, 3), a2(3, 3);
  a1(0, 1) = 1.0;  a1(0, 2) = 2.0;
  a1(1, 0) = -1.0; a1(1, 2) = 0.5;
  a1(2, 0) = -2.0; a1(2, 1) = -0.5;
  a2(0, 1) = 0.7;  a2(0, 2) = 0.9;
  a2(1, 0) = -0.7; a2(1, 2) = 1.0;
  a2(2, 0) = -0.9; a2(2, 1) = -1.0;
  return ProblemSetup{std::make_shared<LinearVectorFields>(std::vector<Matrix>{a1, a2}),
                      Vector{1.0, 0.0, 0.0}};
}

// Scalar geometric equation dy = a y dx with closed-form solution
// y0 exp(a x_T).
inline ProblemSetup scalar_linear_problem(double a) {
  Matrix m(1, 1);
  m(0, 0) = a;
  return ProblemSetup{std::make_shared<LinearVectorFields>(std::vector<Matrix>{m}), Vector{1.0}};
}

// Everything needed to turn driving noise into one functional sample.
struct RdeProblem {
  std::shared_ptr<const VectorFieldSet> fields;
  Vector y0;
  double hurst = 0.4;
  double horizon = 1.0;
  int order = 3;
  PathFunctional functional;

  void validate() const {
    if (!fields) throw std::invalid_argument("RdeProblem: missing vector fields");
    if (y0.size() != fields->dimension())
      throw std::invalid_argument("RdeProblem: initial state dimension mismatch");
    if (!(hurst > 0.0 && hurst < 1.0))
      throw std::domain_error("RdeProblem: hurst must lie in (0,1)");
    if (!(horizon > 0.0)) throw std::domain_error("RdeProblem: horizon must be positive");
    validate_scheme_order(order, hurst);
  }
};

inline RdeProblem make_sphere_rde(double hurst, int order, PathFunctional functional) {
  ProblemSetup setup = sphere_problem();
  RdeProblem p;
  p.fields = std::move(setup.fields);
  p.y0 = std::move(setup.y0);
  p.hurst = hurst;
  p.order = order;
  p.functional = std::move(functional);
  return p;
}

inline RdeProblem make_scalar_linear_rde(double a, double hurst, int order) {
  ProblemSetup setup = scalar_linear_problem(a);
  RdeProblem p;
  p.fields = std::move(setup.fields);
  p.y0 = std::move(setup.y0);
  p.hurst = hurst;
  p.order = order;
  p.functional = functional_terminal;
  return p;
}

}  // namespace mlrde
