#pragma once
// Exact simulation of fractional Brownian motion increments on uniform grids.
// Hosking's method (Durbin-Levinson recursion, O(n^2) time / O(n) memory) is
// the workhorse generator; sampling through the Cholesky factor of the
// increment covariance matrix is kept as an independent oracle.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlrde/errors.hpp"
#include "mlrde/linalg.hpp"
#include "mlrde/numeric.hpp"
#include "mlrde/rng.hpp"

namespace mlrde {

struct FbmSpec {
  double hurst = 0.5;
  double horizon = 1.0;
  std::int64_t n_steps = 1;
  std::int64_t n_components = 1;

  double mesh() const { return horizon / static_cast<double>(n_steps); }

  void validate() const {
    if (!(hurst > 0.0 && hurst < 1.0))
      throw std::domain_error("FbmSpec: hurst must lie in (0,1)");
    if (!(horizon > 0.0)) throw std::domain_error("FbmSpec: horizon must be positive");
    if (n_steps < 1) throw std::domain_error("FbmSpec: n_steps must be positive");
    if (n_components < 1) throw std::domain_error("FbmSpec: n_components must be positive");
  }
};

// Equi-spaced driving-noise increments, one row per component.
class IncrementGrid {
 public:
  IncrementGrid() = default;
  IncrementGrid(double mesh, std::size_t n_components, std::size_t n_steps)
      : mesh_(mesh), d_(n_components), n_(n_steps), data_(n_components * n_steps, 0.0) {}

  double mesh() const { return mesh_; }
  std::size_t n_components() const { return d_; }
  std::size_t n_steps() const { return n_; }

  double operator()(std::size_t component, std::size_t step) const {
    return data_[component * n_ + step];
  }
  double& operator()(std::size_t component, std::size_t step) {
    return data_[component * n_ + step];
  }

  std::span<const double> component(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * n_, n_);
  }

  // Total increment over the horizon (pairwise summation order).
  double component_sum(std::size_t c) const { return pairwise_sum(component(c)); }

  bool operator==(const IncrementGrid&) const = default;

 private:
  double mesh_ = 0.0;
  std::size_t d_ = 0, n_ = 0;
  std::vector<double> data_;
};

// Covariance E[X_s X_t] of one scalar fBM component,
// R(s,t) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.
inline double fbm_covariance(double s, double t, double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::domain_error("fbm_covariance: hurst must lie in (0,1)");
  if (s < 0.0 || t < 0.0) throw std::domain_error("fbm_covariance: negative time");
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
}

// Autocovariance of equi-spaced increments k steps apart,
// gamma(k) = mesh^{2H} (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2.
inline double increment_autocovariance(std::int64_t lag, double mesh, double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::domain_error("increment_autocovariance: hurst must lie in (0,1)");
  if (!(mesh > 0.0)) throw std::domain_error("increment_autocovariance: mesh must be positive");
  if (lag < 0) throw std::domain_error("increment_autocovariance: negative lag");
  const double h2 = 2.0 * hurst;
  const double scale = std::pow(mesh, h2);
  if (lag == 0) return scale;
  const auto k = static_cast<double>(lag);
  return 0.5 * scale * (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) + std::pow(k - 1.0, h2));
}

// Covariance matrix of the n increments of one component.
inline Matrix increment_covariance_matrix(const FbmSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.n_steps);
  std::vector<double> gamma(n);
  for (std::size_t k = 0; k < n; ++k)
    gamma[k] = increment_autocovariance(static_cast<std::int64_t>(k), spec.mesh(), spec.hurst);
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(i, j) = gamma[i >= j ? i - j : j - i];
  return g;
}

namespace detail {

// Relative floor for the Durbin-Levinson innovation variance. Falling below
// it signals that the requested (H, n) exceeds double precision; we fail
// instead of silently clamping and corrupting the law.
inline constexpr double kInnovationFloor = 1e-14;

inline void hosking_component(std::span<const double> gamma, NormalStream& z,
                              std::span<double> x) {
  const std::size_t n = x.size();
  const double gamma0 = gamma[0];
  if (!(gamma0 > 0.0)) throw NumericalError("hosking_sample: non-positive variance");
  double sigma2 = gamma0;
  x[0] = std::sqrt(sigma2) * z.next();
  if (n == 1) return;

  // phi[j] = current partial-correlation coefficient on x_{k-j}, j = 1..k.
  std::vector<double> phi(n, 0.0);
  double a = gamma[1] / gamma0;
  phi[1] = a;
  sigma2 = gamma0 * (1.0 - a * a);
  if (!(sigma2 > kInnovationFloor * gamma0))
    throw NumericalError("hosking_sample: innovation variance underflow");
  x[1] = phi[1] * x[0] + std::sqrt(sigma2) * z.next();

  for (std::size_t k = 2; k < n; ++k) {
    double num = gamma[k];
    for (std::size_t j = 1; j < k; ++j) num -= phi[j] * gamma[k - j];
    a = num / sigma2;
    // phi_{k,j} = phi_{k-1,j} - a * phi_{k-1,k-j}; update symmetric pairs in
    // place so both reads see the previous row.
    for (std::size_t j = 1, m = k - 1; j < m; ++j, --m) {
      const double pj = phi[j], pm = phi[m];
      phi[j] = pj - a * pm;
      phi[m] = pm - a * pj;
    }
    if (k % 2 == 0) phi[k / 2] -= a * phi[k / 2];
    phi[k] = a;
    sigma2 *= (1.0 - a * a);
    if (!(sigma2 > kInnovationFloor * gamma0))
      throw NumericalError("hosking_sample: innovation variance underflow");
    double mean = 0.0;
    for (std::size_t j = 1; j <= k; ++j) mean += phi[j] * x[k - j];
    x[k] = mean + std::sqrt(sigma2) * z.next();
  }
}

}  // namespace detail

// One sample of the exact joint Gaussian law of the increments. Component c
// consumes the independent child stream rng.derive(c).
inline IncrementGrid hosking_sample(const FbmSpec& spec, const RngStream& rng) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.n_steps);
  const auto d = static_cast<std::size_t>(spec.n_components);
  std::vector<double> gamma(n);
  for (std::size_t k = 0; k < n; ++k)
    gamma[k] = increment_autocovariance(static_cast<std::int64_t>(k), spec.mesh(), spec.hurst);
  IncrementGrid grid(spec.mesh(), d, n);
  std::vector<double> x(n);
  for (std::size_t c = 0; c < d; ++c) {
    NormalStream z(rng.derive(c));
    detail::hosking_component(gamma, z, x);
    for (std::size_t k = 0; k < n; ++k) grid(c, k) = x[k];
  }
  return grid;
}

// Cholesky-based oracle sampler. Factors once, samples many times.
class CholeskySampler {
 public:
  explicit CholeskySampler(const FbmSpec& spec)
      : spec_(spec), factor_(cholesky_factor(increment_covariance_matrix(spec))) {}

  const Matrix& factor() const { return factor_; }
  const FbmSpec& spec() const { return spec_; }

  IncrementGrid sample(const RngStream& rng) const {
    const auto n = static_cast<std::size_t>(spec_.n_steps);
    const auto d = static_cast<std::size_t>(spec_.n_components);
    IncrementGrid grid(spec_.mesh(), d, n);
    std::vector<double> z(n);
    for (std::size_t c = 0; c < d; ++c) {
      NormalStream zs(rng.derive(c));
      for (std::size_t k = 0; k < n; ++k) z[k] = zs.next();
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += factor_(i, j) * z[j];
        grid(c, i) = s;
      }
    }
    return grid;
  }

 private:
  FbmSpec spec_;
  Matrix factor_;
};

inline IncrementGrid cholesky_sample(const FbmSpec& spec, const RngStream& rng) {
  return CholeskySampler(spec).sample(rng);
}

// Coarse increment j is the sum of fine increments [j*factor, (j+1)*factor);
// block sums use the fixed pairwise order of pairwise_sum.
inline IncrementGrid coarsen(const IncrementGrid& grid, std::size_t factor) {
  if (factor < 1) throw std::domain_error("coarsen: factor must be positive");
  if (grid.n_steps() % factor != 0)
    throw std::domain_error("coarsen: n_steps not divisible by factor");
  const std::size_t n_coarse = grid.n_steps() / factor;
  IncrementGrid out(grid.mesh() * static_cast<double>(factor), grid.n_components(), n_coarse);
  for (std::size_t c = 0; c < grid.n_components(); ++c) {
    const auto row = grid.component(c);
    for (std::size_t j = 0; j < n_coarse; ++j)
      out(c, j) = pairwise_sum(row.subspan(j * factor, factor));
  }
  return out;
}

}  // namespace mlrde
