#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qot/core.hpp"
#include "qot/diagnostics.hpp"
#include "qot/errors.hpp"
#include "qot/solvers.hpp"
#include "qot/synthetic.hpp"

namespace qot {

enum class SolverKind { gauss_seidel, semismooth_newton };

inline std::string to_string(SolverKind s) {
  return s == SolverKind::gauss_seidel ? "gauss_seidel" : "semismooth_newton";
}

inline SolverKind solver_from_string(const std::string& s) {
  if (s == "gauss_seidel" || s == "nlgs") return SolverKind::gauss_seidel;
  if (s == "semismooth_newton" || s == "ssn")
    return SolverKind::semismooth_newton;
  throw InvalidInput("unknown solver: " + s);
}

/// Paired fraction used when the config leaves it unset.
inline double default_p_pair(int d) {
  const double ratio = 200.0 / static_cast<double>(d);
  return std::min(0.1, 0.1 * ratio * ratio);
}

struct ScalingConfig {
  std::vector<int> dims;
  Index n_source = 300;
  Index n_target = 300;
  double base = 1.00005;
  CovarianceModel cov_model = CovarianceModel::isotropic;
  std::vector<double> relative_eps_grid;
  double init_tol = 1e-2;
  double tau = 1e-12;
  std::vector<std::uint64_t> seeds;
  SolverKind solver = SolverKind::semismooth_newton;
  int jobs = 1;
  std::optional<double> p_pair;  // unset: the dimension-dependent default
  bool warm_start = true;
  Index max_sweeps = 20000;
  Index max_newton_iters = 1000;

  void validate() const {
    if (dims.empty()) throw InvalidInput("ScalingConfig: dims must be nonempty");
    for (int d : dims)
      if (d < 1) throw InvalidInput("ScalingConfig: dims must be >= 1");
    if (n_source < 1 || n_target < 1)
      throw InvalidInput("ScalingConfig: sample counts must be >= 1");
    if (!(base > 0.0)) throw InvalidInput("ScalingConfig: base must be > 0");
    if (relative_eps_grid.size() < 2)
      throw InvalidInput("ScalingConfig: the relative eps grid needs K >= 2");
    for (std::size_t k = 0; k < relative_eps_grid.size(); ++k) {
      if (!(relative_eps_grid[k] > 0.0))
        throw InvalidInput("ScalingConfig: relative eps values must be > 0");
      if (k > 0 && !(relative_eps_grid[k] > relative_eps_grid[k - 1]))
        throw InvalidInput("ScalingConfig: relative eps grid must be strictly increasing");
    }
    if (!(init_tol > 0.0)) throw InvalidInput("ScalingConfig: init_tol must be > 0");
    if (tau < 0.0) throw InvalidInput("ScalingConfig: tau must be >= 0");
    if (seeds.empty()) throw InvalidInput("ScalingConfig: seeds must be nonempty");
    if (jobs < 1) throw InvalidInput("ScalingConfig: jobs must be >= 1");
    if (p_pair && !(*p_pair >= 0.0 && *p_pair <= 1.0))
      throw InvalidInput("ScalingConfig: p_pair must be in [0, 1]");
    if (max_sweeps < 1 || max_newton_iters < 1)
      throw InvalidInput("ScalingConfig: iteration caps must be >= 1");
  }
};

/// The paper-scale grid of relative regularization strengths.
inline std::vector<double> paper_relative_grid() {
  return {1e-8, 5e-8, 1e-7, 5e-7, 1e-6, 5e-6, 1e-5, 5e-5, 1e-4, 5e-4};
}

/// Desk-scale grid: same ladder shifted up two decades, so that at N = 300
/// the upper end still reaches the regime where the plan visibly spreads.
inline std::vector<double> desk_relative_grid() {
  return {1e-6, 5e-6, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2};
}

inline std::vector<double> epsilon_grid(double c_med,
                                        const std::vector<double>& relative) {
  if (!(c_med > 0.0)) throw InvalidInput("epsilon_grid: c_med must be > 0");
  std::vector<double> out(relative.size());
  for (std::size_t k = 0; k < relative.size(); ++k) out[k] = relative[k] * c_med;
  return out;
}

struct LogLogFit {
  double alpha = 0.0;
  double beta = 0.0;
  int points_used = 0;
  std::vector<int> dropped;  // indices with nonpositive bias
};

/// Ordinary least squares of log(bias) on log(eps). Nonpositive bias values
/// are excluded and flagged; fewer than two surviving points is an error.
inline LogLogFit loglog_fit(const std::vector<double>& eps_values,
                            const std::vector<double>& bias_values) {
  if (eps_values.size() != bias_values.size())
    throw InvalidInput("loglog_fit: length mismatch");
  LogLogFit fit;
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < eps_values.size(); ++k) {
    if (!(eps_values[k] > 0.0))
      throw InvalidInput("loglog_fit: eps values must be > 0");
    if (bias_values[k] > 0.0) {
      lx.push_back(std::log(eps_values[k]));
      ly.push_back(std::log(bias_values[k]));
    } else {
      fit.dropped.push_back(static_cast<int>(k));
    }
  }
  fit.points_used = static_cast<int>(lx.size());
  if (fit.points_used < 2)
    throw FitFailure("loglog_fit: fewer than 2 positive bias points");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, var = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    cov += (lx[k] - mx) * (ly[k] - my);
    var += (lx[k] - mx) * (lx[k] - mx);
  }
  if (!(var > 0.0)) throw FitFailure("loglog_fit: degenerate eps grid");
  fit.beta = cov / var;
  fit.alpha = my - fit.beta * mx;
  return fit;
}

/// (d + 2) * beta - 1, the deviation from the predicted exponent.
inline double relative_error(int d, double beta_hat) {
  if (d < 1) throw InvalidInput("relative_error: d must be >= 1");
  return static_cast<double>(d + 2) * beta_hat - 1.0;
}

struct RunRecord {
  int d = 0;
  std::uint64_t seed = 0;
  SolverKind solver = SolverKind::gauss_seidel;
  double eps = 0.0;
  double bias = 0.0;
  bool converged = false;
  Index iters = 0;
  double wall_time_s = 0.0;
  bool used_in_fit = false;
};

struct SeedFit {
  int d = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double alpha = 0.0;
  double beta = 0.0;
  int points_used = 0;
  std::string error;
};

struct DimSummary {
  int d = 0;
  bool ok = false;  // false when no seed produced a fit
  int fits = 0;
  double beta_mean = 0.0;
  double beta_std = 0.0;
  double rel_err = 0.0;
};

struct ScalingReport {
  ScalingConfig config;
  std::vector<RunRecord> runs;  // (d, seed) blocks in config order, eps ascending
  std::vector<SeedFit> seed_fits;
  std::vector<DimSummary> dim_summaries;
  double total_wall_time_s = 0.0;
};

/// Mean and empirical standard deviation (divisor R-1; zero when R = 1) of
/// the fitted exponents of one dimension.
inline DimSummary aggregate(int d, const std::vector<SeedFit>& fits) {
  DimSummary out;
  out.d = d;
  std::vector<double> betas;
  for (const auto& f : fits)
    if (f.d == d && f.ok) betas.push_back(f.beta);
  out.fits = static_cast<int>(betas.size());
  if (betas.empty()) return out;
  out.ok = true;
  const bool all_equal =
      std::all_of(betas.begin(), betas.end(),
                  [&](double b) { return b == betas.front(); });
  if (all_equal) {
    out.beta_mean = betas.front();
    out.beta_std = 0.0;
    out.rel_err = relative_error(d, out.beta_mean);
    return out;
  }
  double mean = 0.0;
  for (double b : betas) mean += b;
  mean /= static_cast<double>(betas.size());
  double var = 0.0;
  for (double b : betas) var += (b - mean) * (b - mean);
  out.beta_mean = mean;
  out.beta_std = std::sqrt(var / static_cast<double>(betas.size() - 1));
  out.rel_err = relative_error(d, mean);
  return out;
}

namespace detail {

struct TaskOutput {
  std::vector<RunRecord> runs;
  SeedFit fit;
};

inline TaskOutput run_scaling_task(const ScalingConfig& cfg, int d,
                                   std::uint64_t seed) {
  TaskOutput out;
  out.fit.d = d;
  out.fit.seed = seed;
  try {
    const AffineBenchmark bench = make_affine_family(d, cfg.base, cfg.cov_model);
    const double p = cfg.p_pair ? *cfg.p_pair : default_p_pair(d);
    const EmpiricalInstance inst =
        generate_instance(bench, cfg.n_source, cfg.n_target, p, seed);
    const RowMatrix cost = quadratic_cost_matrix(inst.X, inst.Y);
    const std::vector<double> grid =
        epsilon_grid(median_cost(cost), cfg.relative_eps_grid);

    std::optional<Vector> warm_g;
    std::optional<DualPotentials> warm_pot;
    for (double eps : grid) {
      const DiscreteProblem problem(inst.a, inst.b, cost, eps);
      SolverConfig sc;
      sc.init_tol = cfg.init_tol;
      RunRecord rec;
      rec.d = d;
      rec.seed = seed;
      rec.solver = cfg.solver;
      rec.eps = eps;
      SolveResult res;
      if (cfg.solver == SolverKind::gauss_seidel) {
        sc.max_iters = cfg.max_sweeps;
        res = nlgs(problem, sc, warm_g);
        if (cfg.warm_start) warm_g = res.potentials.g;
      } else {
        sc.max_iters = cfg.max_newton_iters;
        res = ssn(problem, sc, warm_pot);
        if (cfg.warm_start) warm_pot = res.potentials;
      }
      rec.bias = bias_proxy(res.plan, inst.X, inst.Y, bench, cfg.tau);
      rec.converged = res.stats.converged;
      rec.iters = res.stats.iterations;
      rec.wall_time_s = res.stats.wall_time;
      out.runs.push_back(rec);
    }

    // Fit over converged, positive-bias points; non-converged eps values are
    // excluded and flagged through used_in_fit.
    std::vector<double> fe, fb;
    std::vector<std::size_t> fidx;
    for (std::size_t k = 0; k < out.runs.size(); ++k) {
      if (out.runs[k].converged) {
        fe.push_back(out.runs[k].eps);
        fb.push_back(out.runs[k].bias);
        fidx.push_back(k);
      }
    }
    const LogLogFit fit = loglog_fit(fe, fb);
    std::vector<bool> used(fe.size(), true);
    for (int drop : fit.dropped) used[static_cast<std::size_t>(drop)] = false;
    for (std::size_t k = 0; k < fidx.size(); ++k)
      out.runs[fidx[k]].used_in_fit = used[k];
    out.fit.ok = true;
    out.fit.alpha = fit.alpha;
    out.fit.beta = fit.beta;
    out.fit.points_used = fit.points_used;
  } catch (const std::exception& e) {
    out.fit.ok = false;
    out.fit.error = e.what();
  }
  return out;
}

}  // namespace detail

/// Runs the full scaling sweep: one task per (dimension, seed) distributed
/// over a bounded worker pool, assembled in configuration order so the
/// report does not depend on scheduling or the worker count.
inline ScalingReport run_scaling(const ScalingConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();

  struct Task {
    int d;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int d : config.dims)
    for (std::uint64_t seed : config.seeds) tasks.push_back({d, seed});

  std::vector<detail::TaskOutput> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      slots[t] = detail::run_scaling_task(config, tasks[t].d, tasks[t].seed);
    }
  };
  const int workers =
      std::min<int>(config.jobs, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ScalingReport report;
  report.config = config;
  for (auto& slot : slots) {
    for (auto& rec : slot.runs) report.runs.push_back(rec);
    report.seed_fits.push_back(slot.fit);
  }
  for (int d : config.dims)
    report.dim_summaries.push_back(aggregate(d, report.seed_fits));
  report.total_wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

}  // namespace qot
