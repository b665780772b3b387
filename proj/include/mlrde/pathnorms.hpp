#pragma once
// Quantitative path diagnostics on discrete (grid) paths: p-variation by
// dynamic programming, Hoelder seminorms, and the greedy count of intervals
// on which the p-variation control accumulates mass alpha.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mlrde/linalg.hpp"

namespace mlrde {

struct DiscretePath {
  std::vector<double> times;
  std::vector<Vector> values;  // values[k] is the state at times[k]

  void validate() const {
    if (times.size() != values.size() || times.empty())
      throw std::invalid_argument("DiscretePath: times/values mismatch");
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k] > times[k - 1]))
        throw std::invalid_argument("DiscretePath: times must be strictly increasing");
    const std::size_t dim = values.front().size();
    for (const Vector& v : values)
      if (v.size() != dim) throw std::invalid_argument("DiscretePath: ragged values");
  }

  std::size_t n_points() const { return times.size(); }
};

namespace detail {

inline double segment_norm(const DiscretePath& path, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < path.values[i].size(); ++c) {
    const double d = path.values[j][c] - path.values[i][c];
    s += d * d;
  }
  return std::sqrt(s);
}

// sup over dissections of sum |increment|^p, restricted to grid indices
// [lo, hi]. best[j] = max over i < j of best[i] + |x_j - x_i|^p.
inline double p_variation_power(const DiscretePath& path, double p, std::size_t lo,
                                std::size_t hi) {
  std::vector<double> best(hi - lo + 1, 0.0);
  for (std::size_t j = 1; j < best.size(); ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      const double cand = best[i] + std::pow(segment_norm(path, lo + i, lo + j), p);
      if (cand > m) m = cand;
    }
    best[j] = m;
  }
  return best.back();
}

}  // namespace detail

// Exact supremum over all dissections of the grid, (sum |dx|^p)^{1/p}.
inline double p_variation(const DiscretePath& path, double p) {
  path.validate();
  if (!(p >= 1.0)) throw std::domain_error("p_variation: p must be >= 1");
  if (path.n_points() < 2) return 0.0;
  return std::pow(detail::p_variation_power(path, p, 0, path.n_points() - 1), 1.0 / p);
}

// sup over grid pairs u < v of |x_v - x_u| / (v - u)^exponent.
inline double holder_norm(const DiscretePath& path, double exponent) {
  path.validate();
  if (!(exponent > 0.0 && exponent <= 1.0))
    throw std::domain_error("holder_norm: exponent must lie in (0,1]");
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < path.n_points(); ++i)
    for (std::size_t j = i + 1; j < path.n_points(); ++j) {
      const double v = detail::segment_norm(path, i, j) /
                       std::pow(path.times[j] - path.times[i], exponent);
      if (v > m) m = v;
    }
  return m;
}

// Greedy interval count: tau_0 = t_0 and tau_{i+1} is the first grid point u
// after tau_i with omega(tau_i, u) >= alpha, where omega(s, t) is the p-th
// power of the p-variation over [s, t]. Returns the number of stopping times
// strictly before the final time.
inline int greedy_count(const DiscretePath& path, double p, double alpha) {
  path.validate();
  if (!(p >= 1.0)) throw std::domain_error("greedy_count: p must be >= 1");
  if (!(alpha > 0.0)) throw std::domain_error("greedy_count: alpha must be positive");
  const std::size_t last = path.n_points() - 1;
  std::size_t tau = 0;
  int count = 0;
  while (tau < last) {
    std::size_t next = last + 1;
    for (std::size_t u = tau + 1; u <= last; ++u) {
      if (detail::p_variation_power(path, p, tau, u) >= alpha) {
        next = u;
        break;
      }
    }
    if (next > last) break;  // mass alpha never reached before the final time
    if (next == last) break; // stopped exactly at the final time: not counted
    ++count;
    tau = next;
  }
  return count;
}

}  // namespace mlrde
