#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mlrde {

// Recursive halving sum. The evaluation tree depends only on the length, so
// sums over power-of-two blocks compose bitwise exactly: summing two halves
// of a 2^k block equals summing the block directly.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  if (n == 2) return v[0] + v[1];
  const std::size_t half = n / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  // sample variance, divisor n-1; zero when n < 2
  std::size_t n = 0;
};

inline MeanVar mean_and_variance(std::span<const double> v) {
  MeanVar out;
  out.n = v.size();
  if (v.empty()) return out;
  out.mean = pairwise_sum(v) / static_cast<double>(v.size());
  if (v.size() < 2) return out;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - out.mean;
    sq[i] = d * d;
  }
  out.variance = pairwise_sum(sq) / static_cast<double>(v.size() - 1);
  return out;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // zero when only two points are fitted
};

// Ordinary least squares for y = intercept + slope * x.
inline LineFit ols_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("ols_line: need at least two (x, y) pairs");
  const auto n = static_cast<double>(x.size());
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= n;
  ybar /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return fit;
}

}  // namespace mlrde
