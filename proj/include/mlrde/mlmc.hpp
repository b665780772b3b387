#pragma once
// Multilevel Monte Carlo: coupled level sampling on shared driving noise and
// the refined planner (level count, per-level sample sizes, error split,
// explicit complexity constants).
//
// Planner conventions. The error model is
//   bias_L       <= c1 * h_L^alpha,
//   var(level 0) <= c2' / N_0,
//   var(level l) <= c2 * h_l^beta / N_l,       h_l = h0 * M^{-l},
//   cost(level l) ~ c3 * N_l * (h_l^{-1} + h_{l-1}^{-1}).
// The horizon and coarsest grid size enter all formulas only through the
// coarsest mesh h0, so planner functions take h0 directly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlrde/errors.hpp"
#include "mlrde/fbm.hpp"
#include "mlrde/numeric.hpp"
#include "mlrde/parallel.hpp"
#include "mlrde/problems.hpp"
#include "mlrde/rng.hpp"

namespace mlrde {

// Tolerance below which beta is routed to the beta = 1 regime (the
// closed-form allocation divides by M^{(1-beta)/2} - 1).
inline constexpr double kBetaOneTolerance = 1e-6;

struct MlmcConstants {
  double c1 = 1.0;        // bias constant
  double c2_prime = 1.0;  // level-0 variance constant
  double c2 = 1.0;        // level-difference variance constant
  double c3 = 1.0;        // cost constant
  double alpha = 0.5;     // weak rate, in (0, 1/2]
  double beta = 1.0;      // strong-variance rate, in (0, 2*alpha]

  void validate() const {
    if (!(c1 > 0.0 && c2_prime > 0.0 && c2 > 0.0 && c3 > 0.0))
      throw std::domain_error("MlmcConstants: constants must be positive");
    if (!(alpha > 0.0 && alpha <= 0.5))
      throw std::domain_error("MlmcConstants: alpha must lie in (0, 1/2]");
    if (!(beta > 0.0 && beta <= 2.0 * alpha + 1e-12))
      throw std::domain_error("MlmcConstants: beta must lie in (0, 2*alpha]");
  }
};

struct MlmcPlan {
  int M = 2;
  double h0 = 1.0 / 64.0;
  int L = 0;
  std::vector<std::int64_t> n_samples;  // N_0 .. N_L
  double d1 = std::numbers::sqrt2;

  double mesh_at(int level) const { return h0 * std::pow(static_cast<double>(M), -level); }

  void validate() const {
    if (M < 2) throw std::domain_error("MlmcPlan: M must be >= 2");
    if (!(h0 > 0.0)) throw std::domain_error("MlmcPlan: h0 must be positive");
    if (L < 0) throw std::domain_error("MlmcPlan: L must be nonnegative");
    if (n_samples.size() != static_cast<std::size_t>(L) + 1)
      throw std::domain_error("MlmcPlan: need L+1 sample counts");
    for (std::int64_t n : n_samples)
      if (n < 1) throw std::domain_error("MlmcPlan: sample counts must be positive");
    if (!(d1 > 1.0))
      throw std::domain_error("MlmcPlan: d1 must exceed 1 (statistical budget would vanish)");
  }
};

struct LevelStats {
  int level = 0;
  double mean = 0.0;
  double sample_variance = 0.0;
  std::int64_t samples = 0;
  double cost_units = 0.0;  // scheme steps executed
};

namespace detail {

// Guard against log/pow noise pushing an exact integer across the ceiling.
inline constexpr double kCeilGuard = 1e-9;

inline double geometric_level_sum(int L, int M, double beta) {
  // sum_{l=1}^{L} M^{l(1-beta)/2}
  double s = 0.0;
  const double r = std::pow(static_cast<double>(M), 0.5 * (1.0 - beta));
  double term = 1.0;
  for (int l = 1; l <= L; ++l) {
    term *= r;
    s += term;
  }
  return s;
}

}  // namespace detail

// Smallest L with c1 h_L^alpha <= eps / d1, clamped below at zero.
inline int choose_L(double epsilon, double d1, const MlmcConstants& c, double h0, int M) {
  c.validate();
  if (!(epsilon > 0.0)) throw std::domain_error("choose_L: epsilon must be positive");
  if (!(d1 > 0.0)) throw std::domain_error("choose_L: d1 must be positive");
  if (!(h0 > 0.0) || M < 2) throw std::domain_error("choose_L: bad h0 or M");
  const double x = std::log(d1 * c.c1 * std::pow(h0, c.alpha) / epsilon) /
                   (c.alpha * std::log(static_cast<double>(M)));
  if (x <= 0.0) return 0;
  return static_cast<int>(std::ceil(x - detail::kCeilGuard));
}

// Un-rounded Lagrange-optimal sample sizes for a fixed level count. The
// statistical budget is whatever epsilon^2 leaves after the actual bias at
// L, so the d1 split enters only through the choice of L.
inline std::vector<double> allocate_samples_real(double epsilon, double d1,
                                                 const MlmcConstants& c, double h0, int M,
                                                 int L) {
  c.validate();
  if (!(epsilon > 0.0)) throw std::domain_error("allocate_samples_real: epsilon must be positive");
  if (!(d1 > 1.0)) throw std::domain_error("allocate_samples_real: d1 must exceed 1");
  if (L < 0) throw std::domain_error("allocate_samples_real: L must be nonnegative");
  const double T = h0;
  const double bias = c.c1 * std::pow(T, c.alpha) * std::pow(static_cast<double>(M), -c.alpha * L);
  const double budget = epsilon * epsilon - bias * bias;
  if (!(budget > 0.0))
    throw InfeasibleError("allocate_samples_real: bias alone exceeds the error budget");

  const double gsum = detail::geometric_level_sum(L, M, c.beta);
  const double m_ratio = (static_cast<double>(M) + 1.0) / static_cast<double>(M);
  const double bracket = std::sqrt(c.c2_prime * c.c3 * std::pow(T, -c.beta)) +
                         std::sqrt(c.c2 * c.c3) * std::sqrt(m_ratio) * gsum;
  const double sqrt_lambda = std::pow(T, 0.5 * (c.beta - 1.0)) * bracket / budget;

  std::vector<double> n(static_cast<std::size_t>(L) + 1);
  n[0] = sqrt_lambda * std::sqrt(c.c2_prime * T / c.c3);
  const double level_scale =
      sqrt_lambda * std::sqrt(c.c2 / c.c3) * std::pow(T, 0.5 * (1.0 + c.beta)) / std::sqrt(m_ratio);
  const double decay = std::pow(static_cast<double>(M), -0.5 * (1.0 + c.beta));
  double factor = 1.0;
  for (int l = 1; l <= L; ++l) {
    factor *= decay;
    n[static_cast<std::size_t>(l)] = level_scale * factor;
  }
  return n;
}

inline std::vector<std::int64_t> allocate_samples_lagrange(double epsilon, double d1,
                                                           const MlmcConstants& c, double h0,
                                                           int M, int L) {
  const std::vector<double> real = allocate_samples_real(epsilon, d1, c, h0, M, L);
  std::vector<std::int64_t> n(real.size());
  for (std::size_t i = 0; i < real.size(); ++i)
    n[i] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(real[i])));
  return n;
}

struct ClosedFormAllocation {
  int L = 0;
  double d1_effective = 0.0;  // error split realized after rounding L up
  std::vector<std::int64_t> n_samples;
};

// Explicit allocation formulas with kappa = (1-beta)/(2*alpha), valid for
// beta < 1 strictly. Evaluated at the rounded (integer) L through the
// post-rounding split d1_eff = eps / bias_L, which makes this an independent
// algebraic route to the same optimum as allocate_samples_lagrange.
inline ClosedFormAllocation allocate_samples_closed_form(double epsilon, double d1,
                                                         const MlmcConstants& c, double h0,
                                                         int M) {
  c.validate();
  if (c.beta >= 1.0 - kBetaOneTolerance)
    throw std::domain_error(
        "allocate_samples_closed_form: beta = 1 is outside this formula; use the Lagrange route");
  if (!(d1 > 1.0)) throw std::domain_error("allocate_samples_closed_form: d1 must exceed 1");

  ClosedFormAllocation out;
  out.L = choose_L(epsilon, d1, c, h0, M);
  const double T = h0;
  const double bias =
      c.c1 * std::pow(T, c.alpha) * std::pow(static_cast<double>(M), -c.alpha * out.L);
  out.d1_effective = epsilon / bias;
  if (!(out.d1_effective > 1.0))
    throw InfeasibleError("allocate_samples_closed_form: bias alone exceeds the error budget");

  const double kappa = (1.0 - c.beta) / (2.0 * c.alpha);
  const double mh = std::pow(static_cast<double>(M), 0.5 * (1.0 - c.beta));
  const double m_ratio = (static_cast<double>(M) + 1.0) / static_cast<double>(M);
  // M^{L(1-beta)/2} expressed through the split parameter
  const double growth = std::pow(out.d1_effective * c.c1, kappa) *
                        std::pow(T, 0.5 * (1.0 - c.beta)) * std::pow(epsilon, -kappa);
  const double geom = mh * (growth - 1.0) / (mh - 1.0);
  const double denom =
      epsilon * epsilon * (1.0 - 1.0 / (out.d1_effective * out.d1_effective));
  const double common =
      std::sqrt(c.c2_prime * std::pow(T, -c.beta)) + std::sqrt(c.c2) * std::sqrt(m_ratio) * geom;

  out.n_samples.resize(static_cast<std::size_t>(out.L) + 1);
  const double n0 = std::sqrt(c.c2_prime * std::pow(T, c.beta)) * common / denom;
  out.n_samples[0] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(n0)));
  const double level_scale =
      std::sqrt(c.c2) * std::pow(T, c.beta) * common / (std::sqrt(m_ratio) * denom);
  const double decay = std::pow(static_cast<double>(M), -0.5 * (1.0 + c.beta));
  double factor = 1.0;
  for (int l = 1; l <= out.L; ++l) {
    factor *= decay;
    out.n_samples[static_cast<std::size_t>(l)] =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(level_scale * factor)));
  }
  return out;
}

// Leading complexity coefficient in the alpha = beta/2 regime, as a function
// of the error split d1.
template <class Real = double>
Real c4_prime(Real d1, const MlmcConstants& c, int M) {
  const Real beta = static_cast<Real>(c.beta);
  const Real m = static_cast<Real>(M);
  const Real mh = std::pow(m, (Real(1) - beta) / Real(2));
  const Real a = std::pow(static_cast<Real>(c.c1), (Real(1) - beta) / beta) *
                 std::pow(static_cast<Real>(c.c2), Real(1) / beta) / (d1 * d1 - Real(1)) *
                 std::pow(m, Real(3) * (Real(1) - beta) / Real(2)) /
                 (m * (mh - Real(1)) * (mh - Real(1)));
  const Real b = std::pow(static_cast<Real>(c.c1), Real(2) / beta) * m / (m - Real(1));
  return static_cast<Real>(c.c3) * std::pow(d1, Real(2) / beta) * (m + Real(1)) * (a + b);
}

// Error split minimizing c4_prime; requires the alpha = beta/2 regime and
// beta in (0,1).
inline double optimal_d1(const MlmcConstants& c, int M) {
  c.validate();
  if (!(c.beta > 0.0 && c.beta < 1.0))
    throw std::domain_error("optimal_d1: beta must lie in (0,1)");
  if (std::abs(c.alpha - 0.5 * c.beta) > 1e-6)
    throw std::domain_error("optimal_d1: requires alpha = beta/2");
  const double m = static_cast<double>(M);
  const double mh = std::pow(m, 0.5 * (1.0 - c.beta));
  const double f1 = std::pow(c.c1, (1.0 - c.beta) / c.beta) * std::pow(c.c2, 1.0 / c.beta) *
                    c.c3 * ((m + 1.0) / m) * std::pow(m, 1.5 * (1.0 - c.beta)) /
                    ((mh - 1.0) * (mh - 1.0));
  const double f2 = std::pow(c.c1, 2.0 / c.beta) * c.c3 * m * (m + 1.0) / (m - 1.0);
  const double disc = (1.0 - c.beta) * (1.0 - c.beta) * f1 * f1 + 4.0 * c.beta * f1 * f2;
  return std::sqrt(1.0 - (1.0 - c.beta) * f1 / (2.0 * f2) + std::sqrt(disc) / (2.0 * f2));
}

// Modeled total cost as a function of the level count (bracket^2 / remaining
// budget); valid for every beta in (0,1] via the explicit level sum.
inline double modeled_total_cost(int L, double epsilon, const MlmcConstants& c, double h0,
                                 int M) {
  c.validate();
  const double T = h0;
  const double bias = c.c1 * std::pow(T, c.alpha) * std::pow(static_cast<double>(M), -c.alpha * L);
  const double budget = epsilon * epsilon - bias * bias;
  if (!(budget > 0.0)) return std::numeric_limits<double>::infinity();
  const double m_ratio = (static_cast<double>(M) + 1.0) / static_cast<double>(M);
  const double bracket = std::sqrt(c.c2_prime * c.c3 * std::pow(T, -c.beta)) +
                         std::sqrt(c.c2 * c.c3) * std::sqrt(m_ratio) *
                             detail::geometric_level_sum(L, M, c.beta);
  return bracket * bracket * std::pow(T, -(1.0 - c.beta)) / budget;
}

inline int minimize_cost_over_L(double epsilon, const MlmcConstants& c, double h0, int M,
                                int L_max = 200) {
  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int L = 0; L <= L_max; ++L) {
    const double cost = modeled_total_cost(L, epsilon, c, h0, M);
    if (cost < best_cost) {
      best_cost = cost;
      best = L;
    }
  }
  if (best < 0) throw InfeasibleError("minimize_cost_over_L: no feasible level count");
  return best;
}

struct Beta1Choice {
  int L = 0;
  double d1_effective = 0.0;
};

// Asymptotically optimal level count for beta = 1, alpha >= 1/2, through the
// slowly varying effective split d1 ~ sqrt(1 + const + log(1/eps)).
inline Beta1Choice optimal_L_beta1(double epsilon, const MlmcConstants& c, double h0, int M) {
  c.validate();
  if (std::abs(c.beta - 1.0) > kBetaOneTolerance)
    throw std::domain_error("optimal_L_beta1: requires beta = 1");
  if (c.alpha < 0.5 - 1e-9) throw std::domain_error("optimal_L_beta1: requires alpha >= 1/2");
  if (!(epsilon > 0.0)) throw std::domain_error("optimal_L_beta1: epsilon must be positive");
  const double T = h0;
  const double m = static_cast<double>(M);
  Beta1Choice out;
  out.d1_effective = std::sqrt(1.0 +
                               std::sqrt(c.c2_prime / (c.c2 * T) * m / (m + 1.0)) * c.alpha *
                                   std::log(m) +
                               std::log(1.0 / epsilon));
  out.L = choose_L(epsilon, out.d1_effective, c, h0, M);
  return out;
}

struct ComplexityConstants {
  double c4 = 0.0, c5 = 0.0, c6 = 0.0, c7 = 0.0, c8 = 0.0;
};

// Coefficients of the complexity expansion
//   C <= c4 eps^{-2(1+kappa)} + c5 eps^{-1/alpha} + c6 eps^{-(2+kappa)}
//        + c7 eps^{-2} + c8,    kappa = (1-beta)/(2 alpha).
// c4, c6 and c7 are singular at beta = 1 (the geometric factor degenerates);
// that regime is planned through optimal_L_beta1 instead.
inline ComplexityConstants complexity_constants(const MlmcConstants& c, double d1, double h0,
                                                int M) {
  c.validate();
  if (!(d1 > 1.0)) throw std::domain_error("complexity_constants: d1 must exceed 1");
  const double T = h0;
  const double m = static_cast<double>(M);
  const bool beta_one = c.beta >= 1.0 - kBetaOneTolerance;
  const double kappa = beta_one ? 0.0 : (1.0 - c.beta) / (2.0 * c.alpha);
  const double mh = std::pow(m, 0.5 * (1.0 - c.beta));
  const double m_ratio = (m + 1.0) / m;
  const double split = 1.0 - 1.0 / (d1 * d1);

  ComplexityConstants out;
  out.c4 = std::pow(c.c1, kappa) * std::pow(c.c2, 1.0 + kappa) * c.c3 *
           std::pow(d1, 2.0 * kappa) / split * m_ratio * std::pow(m, 1.5 * (1.0 - c.beta)) /
           ((mh - 1.0) * (mh - 1.0));
  out.c5 = std::pow(c.c1, 1.0 / c.alpha) * c.c3 * std::pow(d1, 1.0 / c.alpha) * m * (m + 1.0) /
           (m - 1.0);
  const double e1 =
      std::sqrt(c.c2_prime * std::pow(T, -c.beta)) - std::sqrt(c.c2) * std::sqrt(m_ratio) * mh /
                                                         (mh - 1.0);
  out.c6 = (std::pow(c.c1, kappa) + std::pow(c.c2, kappa)) * std::sqrt(c.c2) * c.c3 *
           std::pow(d1, 2.0 * kappa) / split * std::pow(T, -0.5 * (1.0 - c.beta)) *
           std::sqrt(m_ratio) * mh / (mh - 1.0) * e1;
  out.c7 = c.c3 * std::pow(T, -(1.0 - c.beta)) / split * e1 * e1;
  out.c8 = -2.0 * c.c3 / (T * (m - 1.0));
  return out;
}

// Asymptotic complexity exponents: eps^{-(1+2*alpha-beta)/alpha} for the
// multilevel estimator, eps^{-(2+1/alpha)} for single-level Monte Carlo.
inline double mlmc_exponent(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0 && beta <= 2.0 * alpha + 1e-12))
    throw std::domain_error("mlmc_exponent: need 0 < beta <= 2*alpha");
  return (1.0 + 2.0 * alpha - beta) / alpha;
}

inline double classical_exponent(double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("classical_exponent: alpha must be positive");
  return 2.0 + 1.0 / alpha;
}

// Modeled mean-square error of a plan: bias^2 plus the modeled estimator
// variance.
inline double modeled_mse(const MlmcPlan& plan, const MlmcConstants& c) {
  plan.validate();
  c.validate();
  const double bias = c.c1 * std::pow(plan.mesh_at(plan.L), c.alpha);
  double mse = bias * bias + c.c2_prime / static_cast<double>(plan.n_samples[0]);
  for (int l = 1; l <= plan.L; ++l)
    mse += c.c2 * std::pow(plan.mesh_at(l), c.beta) /
           static_cast<double>(plan.n_samples[static_cast<std::size_t>(l)]);
  return mse;
}

// Full planning pass: pick the split, the level count and the allocation.
// Defaults: the c4' minimizer when alpha = beta/2, the asymptotic beta = 1
// split when beta = 1, sqrt(2) otherwise.
inline MlmcPlan plan_mlmc(double epsilon, const MlmcConstants& c, double h0, int M,
                          std::optional<double> d1_override = std::nullopt) {
  c.validate();
  MlmcPlan plan;
  plan.M = M;
  plan.h0 = h0;
  if (c.beta >= 1.0 - kBetaOneTolerance) {
    if (d1_override) {
      plan.d1 = *d1_override;
      plan.L = choose_L(epsilon, plan.d1, c, h0, M);
    } else {
      const Beta1Choice choice = optimal_L_beta1(epsilon, c, h0, M);
      plan.d1 = choice.d1_effective;
      plan.L = choice.L;
    }
  } else {
    if (d1_override)
      plan.d1 = *d1_override;
    else if (std::abs(c.alpha - 0.5 * c.beta) <= 1e-9)
      plan.d1 = optimal_d1(c, M);
    else
      plan.d1 = std::numbers::sqrt2;
    plan.L = choose_L(epsilon, plan.d1, c, h0, M);
  }
  plan.n_samples = allocate_samples_lagrange(epsilon, plan.d1, c, h0, M, plan.L);
  plan.validate();
  if (modeled_mse(plan, c) > epsilon * epsilon * (1.0 + 1e-9))
    throw InfeasibleError("plan_mlmc: rounded plan misses the error budget");
  return plan;
}

// ---------------------------------------------------------------------------
// Cost model

enum class CostConvention {
  giles,      // N_0 h_0^{-1} + sum N_l (h_l^{-1} + h_{l-1}^{-1})
  linear,     // sum N_l * (finer grid size)
  quadratic,  // sum N_l * (finer grid size)^2
};

// Cost of a level layout with real-valued sample weights; grid sizes are
// horizon / h_l.
inline double weighted_level_cost(std::span<const double> samples, double h0, int M,
                                  CostConvention convention, double horizon = 1.0) {
  if (samples.empty()) throw std::invalid_argument("weighted_level_cost: empty layout");
  double total = 0.0;
  for (std::size_t l = 0; l < samples.size(); ++l) {
    const double h_l = h0 * std::pow(static_cast<double>(M), -static_cast<double>(l));
    const double fine = horizon / h_l;
    switch (convention) {
      case CostConvention::giles:
        total += samples[l] * (l == 0 ? fine : fine + fine / M);
        break;
      case CostConvention::linear:
        total += samples[l] * fine;
        break;
      case CostConvention::quadratic:
        total += samples[l] * fine * fine;
        break;
    }
  }
  return total;
}

inline double plan_cost(const MlmcPlan& plan, CostConvention convention, double horizon = 1.0,
                        double c3 = 1.0) {
  plan.validate();
  std::vector<double> w(plan.n_samples.begin(), plan.n_samples.end());
  return c3 * weighted_level_cost(w, plan.h0, plan.M, convention, horizon);
}

struct CostComparison {
  double mlmc_cost = 0.0;
  double classical_cost = 0.0;        // equals mlmc_cost by construction
  double classical_paths = 0.0;       // trajectory count solving the cost match
  double quad_linear_ratio = 0.0;     // quadratic-weighted / linear-weighted cost
};

// Matched-cost comparison against a single-level estimator at the finest
// mesh h_L. generator_exponent selects how noise-generation cost scales with
// the grid size (1: linear, 2: quadratic, e.g. a Durbin-Levinson generator).
inline CostComparison cost_model(const MlmcPlan& plan, int generator_exponent,
                                 double horizon = 1.0) {
  if (generator_exponent != 1 && generator_exponent != 2)
    throw std::domain_error("cost_model: generator_exponent must be 1 or 2");
  plan.validate();
  std::vector<double> w(plan.n_samples.begin(), plan.n_samples.end());
  const double linear = weighted_level_cost(w, plan.h0, plan.M, CostConvention::linear, horizon);
  const double quad = weighted_level_cost(w, plan.h0, plan.M, CostConvention::quadratic, horizon);
  const double fine_grid = horizon / plan.mesh_at(plan.L);
  CostComparison out;
  out.mlmc_cost = generator_exponent == 1 ? linear : quad;
  out.classical_paths = out.mlmc_cost / std::pow(fine_grid, generator_exponent);
  out.classical_cost = out.classical_paths * std::pow(fine_grid, generator_exponent);
  out.quad_linear_ratio = quad / linear;
  return out;
}

// ---------------------------------------------------------------------------
// Coupled sampling and the estimator

inline std::int64_t steps_at_level(const MlmcPlan& plan, double horizon, int level) {
  const auto m0 = static_cast<std::int64_t>(std::llround(horizon / plan.h0));
  if (m0 < 1 || std::abs(static_cast<double>(m0) * plan.h0 - horizon) > 1e-9 * horizon)
    throw std::domain_error("steps_at_level: horizon is not a multiple of h0");
  std::int64_t n = m0;
  for (int l = 0; l < level; ++l) n *= plan.M;
  return n;
}

// One coupled sample: level 0 evaluates the functional at mesh h0; level
// l >= 1 returns f(fine) - f(coarse) where the coarse grid is the exact
// block-sum coarsening of the same fine noise.
inline double coupled_level_sample(int level, const MlmcPlan& plan, const RdeProblem& problem,
                                   const RngStream& rng) {
  if (level < 0 || level > plan.L)
    throw std::domain_error("coupled_level_sample: level outside [0, L]");
  problem.validate();
  FbmSpec spec{problem.hurst, problem.horizon, steps_at_level(plan, problem.horizon, level),
               static_cast<std::int64_t>(problem.fields->driver_count())};
  const IncrementGrid fine = hosking_sample(spec, rng);
  const GridPath fine_path = simplified_euler_path(problem.y0, fine, *problem.fields, problem.order);
  const double value = problem.functional(fine_path);
  if (level == 0) return value;
  const IncrementGrid coarse = coarsen(fine, static_cast<std::size_t>(plan.M));
  const GridPath coarse_path =
      simplified_euler_path(problem.y0, coarse, *problem.fields, problem.order);
  return value - problem.functional(coarse_path);
}

struct MlmcRun {
  double estimate = 0.0;
  std::vector<LevelStats> levels;
};

// Sample i of level l draws from the stream substream_id(l, i), so results
// are independent of scheduling and identical for every thread count.
inline MlmcRun mlmc_estimate(const MlmcPlan& plan, const RdeProblem& problem, std::uint64_t seed,
                             unsigned threads = 1, RngEngine engine = RngEngine::counter) {
  plan.validate();
  problem.validate();
  MlmcRun run;
  run.levels.reserve(plan.n_samples.size());
  for (int l = 0; l <= plan.L; ++l) {
    const auto n = static_cast<std::size_t>(plan.n_samples[static_cast<std::size_t>(l)]);
    std::vector<double> values(n);
    parallel_for(n, threads, [&](std::size_t i) {
      const RngStream rng(seed, substream_id(static_cast<std::uint64_t>(l), i), engine);
      values[i] = coupled_level_sample(l, plan, problem, rng);
    });
    const MeanVar mv = mean_and_variance(values);
    LevelStats stats;
    stats.level = l;
    stats.mean = mv.mean;
    stats.sample_variance = mv.variance;
    stats.samples = static_cast<std::int64_t>(n);
    const auto fine_steps = static_cast<double>(steps_at_level(plan, problem.horizon, l));
    stats.cost_units = static_cast<double>(n) * (l == 0 ? fine_steps : fine_steps + fine_steps / plan.M);
    run.levels.push_back(stats);
    run.estimate += stats.mean;
  }
  return run;
}

// ---------------------------------------------------------------------------
// Pilot fitting

struct PilotFit {
  MlmcConstants constants;
  double alpha_fitted = 0.0;  // raw slope of the |mean| regression
  bool beta_capped = false;   // beta was reduced to 2*alpha
  bool alpha_clamped = false; // fitted alpha fell outside (0, 1/2]
};

// Fits the error-model power laws from pilot per-level statistics. meshes[i]
// is h at stats[i]; stats must start at level 0 and be ordered by level.
inline PilotFit estimate_constants(std::span<const LevelStats> stats,
                                   std::span<const double> meshes) {
  if (stats.size() != meshes.size())
    throw std::invalid_argument("estimate_constants: stats/meshes size mismatch");
  if (stats.size() < 3)
    throw std::invalid_argument("estimate_constants: need at least 3 pilot levels");
  for (const LevelStats& s : stats)
    if (s.samples < 100)
      throw std::invalid_argument("estimate_constants: need at least 100 samples per pilot level");

  PilotFit fit;
  std::vector<double> log_h, log_var, log_mean;
  for (std::size_t i = 1; i < stats.size(); ++i) {
    if (!(stats[i].sample_variance > 0.0))
      throw NumericalError("estimate_constants: non-positive level variance");
    if (!(std::abs(stats[i].mean) > 0.0))
      throw NumericalError("estimate_constants: vanishing level mean");
    log_h.push_back(std::log(meshes[i]));
    log_var.push_back(std::log(stats[i].sample_variance));
    log_mean.push_back(std::log(std::abs(stats[i].mean)));
  }
  const LineFit var_fit = ols_line(log_h, log_var);
  const LineFit mean_fit = ols_line(log_h, log_mean);

  fit.alpha_fitted = mean_fit.slope;
  double alpha = mean_fit.slope;
  if (!(alpha > 0.0)) {
    alpha = 0.01;
    fit.alpha_clamped = true;
  } else if (alpha > 0.5) {
    alpha = 0.5;
    fit.alpha_clamped = true;
  }
  double beta = var_fit.slope;
  if (!(beta > 0.0)) {
    beta = 0.01;
    fit.beta_capped = true;
  }
  if (beta > 2.0 * alpha) {
    beta = 2.0 * alpha;
    fit.beta_capped = true;
  }

  fit.constants.c2 = std::exp(var_fit.intercept);
  fit.constants.c2_prime = stats[0].sample_variance;
  fit.constants.c1 = std::exp(mean_fit.intercept);
  fit.constants.alpha = alpha;
  fit.constants.beta = beta;

  double cost = 0.0, modeled = 0.0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    cost += stats[i].cost_units;
    const double fine = 1.0 / meshes[i];
    const double coarse = i == 0 ? 0.0 : 1.0 / meshes[i - 1];
    modeled += static_cast<double>(stats[i].samples) * (fine + coarse);
  }
  fit.constants.c3 = modeled > 0.0 ? cost / modeled : 1.0;
  fit.constants.validate();
  return fit;
}

}  // namespace mlrde
