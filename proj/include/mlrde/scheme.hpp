#pragma once
// Simplified step-N Euler scheme: one step maps y to
//   y + sum_{k=1}^{N} (1/k!) sum_{words (i1..ik)} V_{i1}...V_{ik} I(y)
//                                  dx^{i1} ... dx^{ik},
// i.e. iterated integrals are replaced by products of increments. On a
// piecewise-linear driver this coincides with the full step-N Euler scheme
// at grid points. N = 3 covers the rough regime H < 1/2; N = 2 suffices for
// H >= 1/2.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlrde/fbm.hpp"
#include "mlrde/linalg.hpp"
#include "mlrde/vector_fields.hpp"

namespace mlrde {

inline constexpr int kMaxSchemeOrder = 3;

inline void validate_scheme_order(int order, double hurst) {
  if (order != 2 && order != 3)
    throw std::domain_error("scheme order must be 2 or 3");
  if (order == 2 && hurst < 0.5)
    throw std::domain_error("scheme order 2 requires hurst >= 0.5; use order 3");
}

namespace detail {

// Advances w through {0..d-1}^k in counting order; false once it wraps.
inline bool next_word(std::vector<std::size_t>& w, std::size_t d) {
  for (std::size_t pos = w.size(); pos-- > 0;) {
    if (++w[pos] < d) return true;
    w[pos] = 0;
  }
  return false;
}

}  // namespace detail

// Generic word-sum route; used directly by tests and as the fallback for
// nonlinear fields.
inline Vector word_sum_step(const Vector& y, std::span<const double> dx,
                            const VectorFieldSet& fields, int order) {
  if (order < 1 || order > kMaxSchemeOrder)
    throw std::domain_error("word_sum_step: order must be in [1,3]");
  const std::size_t d = fields.driver_count();
  if (dx.size() != d) throw std::invalid_argument("word_sum_step: increment dimension mismatch");
  if (y.size() != fields.dimension())
    throw std::invalid_argument("word_sum_step: state dimension mismatch");

  Vector acc = y;
  double factorial = 1.0;
  std::vector<std::size_t> word;
  for (int k = 1; k <= order; ++k) {
    factorial *= static_cast<double>(k);
    word.assign(static_cast<std::size_t>(k), 0);
    do {
      double prod = 1.0;
      for (std::size_t letter : word) prod *= dx[letter];
      if (prod != 0.0) {
        const Vector v = fields.word_value(word, y);
        const double w = prod / factorial;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * v[i];
      }
    } while (detail::next_word(word, d));
  }
  return acc;
}

// Truncated exponential I + B + ... + B^N / N!. For linear fields the
// simplified step equals this matrix applied to y.
inline Matrix linear_step_matrix(const Matrix& b, int order) {
  if (order < 1) throw std::domain_error("linear_step_matrix: order must be >= 1");
  if (b.rows() != b.cols()) throw std::invalid_argument("linear_step_matrix: square matrix required");
  Matrix r = Matrix::identity(b.rows());
  Matrix p = Matrix::identity(b.rows());
  for (int k = 1; k <= order; ++k) {
    p = p * b;
    p *= 1.0 / static_cast<double>(k);
    r += p;
  }
  return r;
}

inline Vector simplified_euler_step(const Vector& y, std::span<const double> dx,
                                    const VectorFieldSet& fields, int order) {
  if (const std::vector<Matrix>* mats = fields.linear_matrices()) {
    if (dx.size() != mats->size())
      throw std::invalid_argument("simplified_euler_step: increment dimension mismatch");
    if (y.size() != fields.dimension())
      throw std::invalid_argument("simplified_euler_step: state dimension mismatch");
    if (order < 1 || order > kMaxSchemeOrder)
      throw std::domain_error("simplified_euler_step: order must be in [1,3]");
    const std::size_t e = y.size();
    Matrix b(e, e);
    for (std::size_t i = 0; i < mats->size(); ++i)
      if (dx[i] != 0.0) b.axpy(dx[i], (*mats)[i]);
    Vector acc = y;
    Vector z = y;
    for (int k = 1; k <= order; ++k) {
      z = b.apply(z);
      const double inv = 1.0 / static_cast<double>(k);
      for (double& v : z) v *= inv;
      for (std::size_t i = 0; i < e; ++i) acc[i] += z[i];
    }
    return acc;
  }
  return word_sum_step(y, dx, fields, order);
}

// Piecewise-linear path on a uniform grid.
class GridPath {
 public:
  GridPath() = default;
  GridPath(std::vector<double> times, std::vector<Vector> states)
      : times_(std::move(times)), states_(std::move(states)) {
    if (times_.size() != states_.size() || times_.empty())
      throw std::invalid_argument("GridPath: times/states mismatch");
  }

  std::size_t n_steps() const { return times_.size() - 1; }
  std::size_t dimension() const { return states_.front().size(); }
  const std::vector<double>& times() const { return times_; }
  const Vector& state(std::size_t k) const { return states_[k]; }
  const Vector& terminal() const { return states_.back(); }
  double terminal_time() const { return times_.back(); }

  // Affine interpolation between grid points; exact at grid times.
  Vector value_at(double t) const {
    if (t < times_.front() || t > times_.back())
      throw std::domain_error("GridPath::value_at: time outside the grid");
    if (t == times_.back()) return states_.back();
    const double mesh = (times_.back() - times_.front()) / static_cast<double>(n_steps());
    auto k = static_cast<std::size_t>((t - times_.front()) / mesh);
    if (k >= n_steps()) k = n_steps() - 1;
    if (t < times_[k]) --k;           // guard against rounding at cell edges
    if (t >= times_[k + 1]) ++k;
    const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
    Vector v(dimension());
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = states_[k][i] + w * (states_[k + 1][i] - states_[k][i]);
    return v;
  }

 private:
  std::vector<double> times_;
  std::vector<Vector> states_;
};

inline GridPath simplified_euler_path(const Vector& y0, const IncrementGrid& grid,
                                      const VectorFieldSet& fields, int order) {
  const std::size_t n = grid.n_steps();
  const std::size_t d = grid.n_components();
  if (d != fields.driver_count())
    throw std::invalid_argument("simplified_euler_path: driver count mismatch");
  const double horizon = grid.mesh() * static_cast<double>(n);
  std::vector<double> times(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    times[k] = horizon * static_cast<double>(k) / static_cast<double>(n);
  std::vector<Vector> states;
  states.reserve(n + 1);
  states.push_back(y0);
  std::vector<double> dx(d);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t c = 0; c < d; ++c) dx[c] = grid(c, k);
    states.push_back(simplified_euler_step(states.back(), dx, fields, order));
  }
  return GridPath(std::move(times), std::move(states));
}

// Pathwise solution of the one-dimensional linear equation dy = a y dx.
inline double exact_linear_1d(double a, double x_T, double y0) {
  return y0 * std::exp(a * x_T);
}

}  // namespace mlrde
