#pragma once
// Convergence-rate experiment harness. Strong errors compare a scheme run at
// N steps against a run at 2N steps driven by the increments of the same
// noise (the coarse grid is the exact block-sum coarsening of the fine one);
// weak errors compare the sample mean of a functional against a known
// reference value.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mlrde/errors.hpp"
#include "mlrde/fbm.hpp"
#include "mlrde/mlmc.hpp"
#include "mlrde/numeric.hpp"
#include "mlrde/parallel.hpp"
#include "mlrde/problems.hpp"
#include "mlrde/rng.hpp"

namespace mlrde {

struct ErrorLadder {
  std::vector<double> meshes;      // strictly decreasing
  std::vector<double> errors;
  std::vector<double> std_errors;  // Monte Carlo standard error per point
  std::int64_t paths = 0;

  void validate() const {
    if (meshes.size() != errors.size() || meshes.size() != std_errors.size())
      throw std::invalid_argument("ErrorLadder: column length mismatch");
    for (std::size_t i = 1; i < meshes.size(); ++i)
      if (!(meshes[i] < meshes[i - 1]))
        throw std::invalid_argument("ErrorLadder: meshes must be strictly decreasing");
    for (double s : std_errors)
      if (s < 0.0) throw std::invalid_argument("ErrorLadder: negative standard error");
  }
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;         // log-error at log-mesh zero
  double slope_stderr = 0.0;
  std::size_t window_begin = 0;   // [begin, end) index range of the fit
  std::size_t window_end = 0;
};

// Least squares of log(error) on log(mesh) over [begin, end).
inline RateFit fit_rate(const ErrorLadder& ladder, std::size_t begin, std::size_t end) {
  ladder.validate();
  if (end > ladder.meshes.size() || begin + 2 > end)
    throw std::invalid_argument("fit_rate: window must contain at least two points");
  std::vector<double> x, y;
  for (std::size_t i = begin; i < end; ++i) {
    if (!(ladder.errors[i] > 0.0))
      throw std::domain_error("fit_rate: non-positive error inside the fit window");
    x.push_back(std::log(ladder.meshes[i]));
    y.push_back(std::log(ladder.errors[i]));
  }
  const LineFit fit = ols_line(x, y);
  return RateFit{fit.slope, fit.intercept, fit.slope_stderr, begin, end};
}

// Indices of ladder points with mesh <= threshold.
inline std::pair<std::size_t, std::size_t> asymptotic_window(const ErrorLadder& ladder,
                                                             double mesh_threshold) {
  std::size_t begin = ladder.meshes.size();
  for (std::size_t i = 0; i < ladder.meshes.size(); ++i)
    if (ladder.meshes[i] <= mesh_threshold) {
      begin = i;
      break;
    }
  return {begin, ladder.meshes.size()};
}

enum class StrongReference {
  finer,  // |Y^N_T - Y^{2N}_T| on shared noise
  exact,  // |Y^N_T - y0 exp(a x_T)| for the scalar linear problem
};

struct StrongCurveOptions {
  StrongReference reference = StrongReference::finer;
  bool sup_over_grid = false;  // maximize |fine - coarse| over coarse grid times
  double exact_linear_a = 1.0; // coefficient when reference == exact
  unsigned threads = 1;
  RngEngine engine = RngEngine::counter;
};

// Ladder point q, path p draws from stream substream_id(q, p).
inline ErrorLadder strong_error_curve(const RdeProblem& problem,
                                      std::span<const std::int64_t> step_ladder,
                                      std::int64_t n_paths, std::uint64_t seed,
                                      const StrongCurveOptions& options = {}) {
  problem.validate();
  if (step_ladder.empty()) throw std::invalid_argument("strong_error_curve: empty ladder");
  if (n_paths < 2) throw std::invalid_argument("strong_error_curve: need at least 2 paths");

  ErrorLadder ladder;
  ladder.paths = n_paths;
  for (std::size_t q = 0; q < step_ladder.size(); ++q) {
    const std::int64_t n_coarse = step_ladder[q];
    if (n_coarse < 1) throw std::invalid_argument("strong_error_curve: bad step count");
    const bool vs_finer = options.reference == StrongReference::finer;
    FbmSpec spec{problem.hurst, problem.horizon, vs_finer ? 2 * n_coarse : n_coarse,
                 static_cast<std::int64_t>(problem.fields->driver_count())};
    std::vector<double> values(static_cast<std::size_t>(n_paths));
    parallel_for(values.size(), options.threads, [&](std::size_t p) {
      const RngStream rng(seed, substream_id(q, p), options.engine);
      const IncrementGrid fine = hosking_sample(spec, rng);
      const GridPath fine_path =
          simplified_euler_path(problem.y0, fine, *problem.fields, problem.order);
      if (!vs_finer) {
        const double x_T = fine.component_sum(0);
        values[p] = std::abs(fine_path.terminal()[0] -
                             exact_linear_1d(options.exact_linear_a, x_T, problem.y0[0]));
        return;
      }
      const IncrementGrid coarse = coarsen(fine, 2);
      const GridPath coarse_path =
          simplified_euler_path(problem.y0, coarse, *problem.fields, problem.order);
      if (options.sup_over_grid) {
        double worst = 0.0;
        for (std::size_t k = 0; k < coarse_path.times().size(); ++k) {
          const Vector& a = coarse_path.state(k);
          const Vector& b = fine_path.state(2 * k);
          double s = 0.0;
          for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
          worst = std::max(worst, std::sqrt(s));
        }
        values[p] = worst;
      } else {
        const Vector& a = coarse_path.terminal();
        const Vector& b = fine_path.terminal();
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        values[p] = std::sqrt(s);
      }
    });
    const MeanVar mv = mean_and_variance(values);
    ladder.meshes.push_back(problem.horizon / static_cast<double>(n_coarse));
    ladder.errors.push_back(mv.mean);
    ladder.std_errors.push_back(std::sqrt(mv.variance / static_cast<double>(n_paths)));
  }
  ladder.validate();
  return ladder;
}

// |E f(Y^N) - reference| per ladder mesh, with the Monte Carlo standard
// error of the mean.
inline ErrorLadder weak_error_curve(const RdeProblem& problem, double reference,
                                    std::span<const std::int64_t> step_ladder,
                                    std::int64_t n_paths, std::uint64_t seed,
                                    unsigned threads = 1,
                                    RngEngine engine = RngEngine::counter) {
  problem.validate();
  if (!problem.functional) throw std::invalid_argument("weak_error_curve: missing functional");
  if (step_ladder.empty()) throw std::invalid_argument("weak_error_curve: empty ladder");
  if (n_paths < 2) throw std::invalid_argument("weak_error_curve: need at least 2 paths");

  ErrorLadder ladder;
  ladder.paths = n_paths;
  for (std::size_t q = 0; q < step_ladder.size(); ++q) {
    const std::int64_t n = step_ladder[q];
    if (n < 1) throw std::invalid_argument("weak_error_curve: bad step count");
    FbmSpec spec{problem.hurst, problem.horizon, n,
                 static_cast<std::int64_t>(problem.fields->driver_count())};
    std::vector<double> values(static_cast<std::size_t>(n_paths));
    parallel_for(values.size(), threads, [&](std::size_t p) {
      const RngStream rng(seed, substream_id(q, p), engine);
      const IncrementGrid grid = hosking_sample(spec, rng);
      values[p] =
          problem.functional(simplified_euler_path(problem.y0, grid, *problem.fields, problem.order));
    });
    const MeanVar mv = mean_and_variance(values);
    ladder.meshes.push_back(problem.horizon / static_cast<double>(n));
    ladder.errors.push_back(std::abs(mv.mean - reference));
    ladder.std_errors.push_back(std::sqrt(mv.variance / static_cast<double>(n_paths)));
  }
  ladder.validate();
  return ladder;
}

// ---------------------------------------------------------------------------
// Matched-cost comparison of the multilevel estimator against single-level
// Monte Carlo at the finest mesh. Per-level sample counts follow the
// heuristic N_l = ceil(N_0 M^{-l(1+beta)/2}); the single-level trajectory
// count solves cost equality under the trajectories-times-grid-size
// convention. Estimator variances are the per-level sample variances pooled
// over `replicates` independent repetitions, combined as sum_l S^2_l / N_l
// and S^2 / N_c respectively.

struct CompareConfig {
  RdeProblem problem;
  double h0 = 1.0 / 64.0;
  int levels = 7;  // L
  int M = 2;
  std::int64_t n0 = 100;
  double allocation_beta = 0.6;
  std::uint64_t seed = 0;
  int replicates = 1;
  unsigned threads = 1;
  RngEngine engine = RngEngine::counter;
};

struct CompareReport {
  MlmcPlan plan;
  std::vector<LevelStats> levels;      // pooled over replicates
  double mlmc_estimate = 0.0;
  double classical_estimate = 0.0;
  double mlmc_variance = 0.0;          // estimator variance, sum_l S^2_l / N_l
  double classical_variance = 0.0;     // S^2 / N_c
  double variance_ratio = 0.0;         // mlmc / classical
  double mlmc_cost = 0.0;              // modeled, linear convention
  double classical_cost = 0.0;         // equals mlmc_cost by construction
  double classical_paths_real = 0.0;
  std::int64_t classical_paths = 0;
  double mlmc_seconds = 0.0;
  double classical_seconds = 0.0;
};

inline MlmcPlan heuristic_plan(double h0, int levels, int M, std::int64_t n0,
                               double allocation_beta) {
  MlmcPlan plan;
  plan.M = M;
  plan.h0 = h0;
  plan.L = levels;
  plan.n_samples.resize(static_cast<std::size_t>(levels) + 1);
  for (int l = 0; l <= levels; ++l) {
    const double decay =
        std::pow(static_cast<double>(M), -0.5 * (1.0 + allocation_beta) * static_cast<double>(l));
    plan.n_samples[static_cast<std::size_t>(l)] = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(n0) * decay));
  }
  return plan;
}

inline CompareReport compare_mlmc_classical(const CompareConfig& config) {
  config.problem.validate();
  if (!config.problem.functional)
    throw std::invalid_argument("compare_mlmc_classical: missing functional");
  if (config.replicates < 1)
    throw std::invalid_argument("compare_mlmc_classical: need at least one replicate");
  if (config.n0 < 2) throw std::invalid_argument("compare_mlmc_classical: n0 too small");

  CompareReport report;
  report.plan = heuristic_plan(config.h0, config.levels, config.M, config.n0,
                               config.allocation_beta);
  report.plan.validate();

  const CostComparison cost = cost_model(report.plan, 1, config.problem.horizon);
  report.mlmc_cost = cost.mlmc_cost;
  report.classical_cost = cost.classical_cost;
  report.classical_paths_real = cost.classical_paths;
  report.classical_paths =
      std::max<std::int64_t>(2, static_cast<std::int64_t>(std::llround(cost.classical_paths)));

  const auto r = static_cast<std::size_t>(config.replicates);
  using clock = std::chrono::steady_clock;

  const auto t0 = clock::now();
  for (int l = 0; l <= report.plan.L; ++l) {
    const auto n_per_rep = static_cast<std::size_t>(report.plan.n_samples[static_cast<std::size_t>(l)]);
    std::vector<double> values(n_per_rep * r);
    parallel_for(values.size(), config.threads, [&](std::size_t idx) {
      const RngStream rng(config.seed,
                          substream_id(static_cast<std::uint64_t>(l), idx), config.engine);
      values[idx] = coupled_level_sample(l, report.plan, config.problem, rng);
    });
    const MeanVar mv = mean_and_variance(values);
    LevelStats stats;
    stats.level = l;
    stats.mean = mv.mean;
    stats.sample_variance = mv.variance;
    stats.samples = static_cast<std::int64_t>(values.size());
    const auto fine_steps = static_cast<double>(steps_at_level(report.plan, config.problem.horizon, l));
    stats.cost_units =
        static_cast<double>(values.size()) * (l == 0 ? fine_steps : fine_steps + fine_steps / config.M);
    report.levels.push_back(stats);
    report.mlmc_estimate += stats.mean;
    report.mlmc_variance += stats.sample_variance / static_cast<double>(n_per_rep);
  }
  report.mlmc_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  const auto t1 = clock::now();
  {
    FbmSpec spec{config.problem.hurst, config.problem.horizon,
                 steps_at_level(report.plan, config.problem.horizon, report.plan.L),
                 static_cast<std::int64_t>(config.problem.fields->driver_count())};
    const auto n_per_rep = static_cast<std::size_t>(report.classical_paths);
    std::vector<double> values(n_per_rep * r);
    // separate stream family from the level samples
    constexpr std::uint64_t kClassicalTag = 0x636c61737369636dULL;
    parallel_for(values.size(), config.threads, [&](std::size_t idx) {
      const RngStream rng(config.seed, substream_id(kClassicalTag, idx), config.engine);
      const IncrementGrid grid = hosking_sample(spec, rng);
      values[idx] = config.problem.functional(
          simplified_euler_path(config.problem.y0, grid, *config.problem.fields,
                                config.problem.order));
    });
    const MeanVar mv = mean_and_variance(values);
    report.classical_estimate = mv.mean;
    report.classical_variance = mv.variance / static_cast<double>(n_per_rep);
  }
  report.classical_seconds = std::chrono::duration<double>(clock::now() - t1).count();

  report.variance_ratio = report.mlmc_variance / report.classical_variance;
  return report;
}

}  // namespace mlrde
