// Command-line entry point: deterministic batch runs for generation,
// solving, scaling experiments and self-verification.
//
// Exit codes: 0 success, 1 check failure, 2 invalid input, 3 sampling
// failure, 4 numerical failure.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "qot/checks.hpp"
#include "qot/core.hpp"
#include "qot/diagnostics.hpp"
#include "qot/experiments.hpp"
#include "qot/serialize.hpp"
#include "qot/solvers.hpp"
#include "qot/svg.hpp"
#include "qot/synthetic.hpp"
#include "qot/version.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInvalidInput = 2;
constexpr int kExitSamplingFailure = 3;
constexpr int kExitNumericalFailure = 4;

struct CliOptions {
  std::string command;
  std::string config_path;
  std::string instance_path;
  std::string out_dir = ".";
  std::string solver = "ssn";
  std::string preset;
  std::string suite = "all";
  double eps = 0.0;
  double tau = 1e-12;
  double init_tol = 1e-2;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool plot = false;
};

int cmd_generate(const CliOptions& opt) {
  const qot::json j =
      qot::detail::parse_json(qot::read_file(opt.config_path), "generate config");
  qot::GenerateConfig cfg = qot::generate_config_from_json(j);
  if (opt.seed) cfg.seeds = {*opt.seed};
  fs::create_directories(opt.out_dir);
  for (int d : cfg.dims) {
    const qot::AffineBenchmark bench =
        qot::make_affine_family(d, cfg.base, cfg.cov_model);
    const double p = cfg.p_pair ? *cfg.p_pair : qot::default_p_pair(d);
    for (std::uint64_t seed : cfg.seeds) {
      const qot::EmpiricalInstance inst = qot::generate_instance(
          bench, cfg.n_source, cfg.n_target, p, seed);
      const fs::path path = fs::path(opt.out_dir) /
                            ("instance_d" + std::to_string(d) + "_seed" +
                             std::to_string(seed) + ".json");
      qot::atomic_write_file(path, qot::instance_to_json(inst).dump(2) + "\n");
      std::cout << "wrote " << path.string() << " d=" << d << " seed=" << seed
                << " N=" << inst.n() << " M=" << inst.m()
                << " paired=" << inst.paired_count << "\n";
    }
  }
  return kExitOk;
}

int cmd_solve(const CliOptions& opt) {
  if (!(opt.eps > 0.0)) throw qot::InvalidInput("--eps must be > 0");
  const qot::json j =
      qot::detail::parse_json(qot::read_file(opt.instance_path), "instance");
  const qot::EmpiricalInstance inst = qot::instance_from_json(j);
  const qot::RowMatrix cost = qot::quadratic_cost_matrix(inst.X, inst.Y);
  const qot::DiscreteProblem problem(inst.a, inst.b, cost, opt.eps);

  qot::SolverConfig cfg;
  cfg.init_tol = opt.init_tol;
  const qot::SolverKind kind = qot::solver_from_string(opt.solver);
  const qot::SolveResult res = kind == qot::SolverKind::gauss_seidel
                                   ? qot::nlgs(problem, cfg)
                                   : qot::ssn(problem, cfg);

  fs::create_directories(opt.out_dir);
  qot::atomic_write_file(fs::path(opt.out_dir) / "potentials.json",
                         qot::potentials_to_json(res.potentials).dump(2) + "\n");
  qot::atomic_write_file(fs::path(opt.out_dir) / "plan.csv",
                         qot::plan_to_csv(res.plan));

  qot::json stats;
  stats["schema_version"] = 1;
  stats["version"] = QOT_VERSION;
  stats["solver"] = qot::to_string(kind);
  stats["eps"] = opt.eps;
  stats["iterations"] = res.stats.iterations;
  stats["converged"] = res.stats.converged;
  stats["final_residual"] = res.stats.final_residual;
  stats["primal_objective"] = qot::primal_objective(problem, res.plan);
  stats["dual_objective"] = qot::dual_objective(problem, res.potentials);
  stats["support_size"] = res.plan.entries.size();
  stats["bias_proxy"] =
      qot::bias_proxy(res.plan, inst.X, inst.Y, inst.benchmark, opt.tau);
  if (inst.fully_paired()) {
    const double ot_ref =
        qot::discrete_ot_paired(inst.X, inst.a, inst.benchmark);
    stats["value_gap"] = qot::value_gap(problem, res.plan, ot_ref);
  }
  stats["wall_time_s"] = res.stats.wall_time;
  qot::atomic_write_file(fs::path(opt.out_dir) / "stats.json",
                         stats.dump(2) + "\n");
  std::cout << "solved " << opt.instance_path << " eps=" << opt.eps
            << " converged=" << (res.stats.converged ? "true" : "false")
            << " iters=" << res.stats.iterations << "\n";
  return kExitOk;
}

qot::ScalingConfig preset_config(const std::string& name) {
  qot::ScalingConfig cfg;
  if (name == "paper") {
    cfg.dims = {100, 200, 500, 1000};
    cfg.n_source = cfg.n_target = 2000;
    cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    cfg.base = 1.00005;
    cfg.cov_model = qot::CovarianceModel::paper;
    cfg.relative_eps_grid = qot::paper_relative_grid();
  } else if (name == "desk") {
    cfg.dims = {10, 20, 50};
    cfg.n_source = cfg.n_target = 300;
    cfg.seeds = {1, 2, 3};
    cfg.base = 1.00005;
    cfg.cov_model = qot::CovarianceModel::isotropic;
    cfg.relative_eps_grid = qot::desk_relative_grid();
  } else if (name == "smoke1d") {
    cfg.dims = {1};
    cfg.n_source = cfg.n_target = 300;
    cfg.seeds = {1, 2, 3};
    cfg.base = 1.0;
    cfg.cov_model = qot::CovarianceModel::isotropic;
    cfg.relative_eps_grid = qot::paper_relative_grid();
    cfg.p_pair = 1.0;
    cfg.solver = qot::SolverKind::gauss_seidel;
  } else {
    throw qot::InvalidInput("unknown preset: " + name);
  }
  return cfg;
}

int cmd_scale(const CliOptions& opt, bool solver_given) {
  qot::ScalingConfig cfg;
  if (!opt.preset.empty() && !opt.config_path.empty())
    throw qot::InvalidInput("pass either --preset or --config, not both");
  if (!opt.preset.empty()) {
    cfg = preset_config(opt.preset);
  } else if (!opt.config_path.empty()) {
    cfg = qot::scaling_config_from_json(
        qot::detail::parse_json(qot::read_file(opt.config_path), "scaling config"));
  } else {
    throw qot::InvalidInput("scale needs --preset or --config");
  }
  if (solver_given) cfg.solver = qot::solver_from_string(opt.solver);
  cfg.jobs = opt.jobs;

  const qot::ScalingReport report = qot::run_scaling(cfg);

  fs::create_directories(opt.out_dir);
  qot::atomic_write_file(fs::path(opt.out_dir) / "runs.csv",
                         qot::runs_to_csv(report));
  qot::atomic_write_file(fs::path(opt.out_dir) / "summary.csv",
                         qot::summary_to_csv(report));
  qot::atomic_write_file(fs::path(opt.out_dir) / "metadata.json",
                         qot::report_metadata(report).dump(2) + "\n");
  if (opt.plot) {
    std::vector<int> dims;
    std::vector<double> means, stds, errs;
    for (const auto& s : report.dim_summaries) {
      if (!s.ok) continue;
      dims.push_back(s.d);
      means.push_back(s.beta_mean);
      stds.push_back(s.beta_std);
      errs.push_back(s.rel_err);
    }
    if (!dims.empty()) {
      qot::atomic_write_file(fs::path(opt.out_dir) / "beta_vs_d.svg",
                             qot::svg_beta_plot(dims, means, stds));
      qot::atomic_write_file(fs::path(opt.out_dir) / "rel_err.svg",
                             qot::svg_relerr_plot(dims, errs));
    }
  }
  for (const auto& s : report.dim_summaries) {
    std::cout << "d=" << s.d;
    if (s.ok)
      std::cout << " beta_mean=" << s.beta_mean << " beta_std=" << s.beta_std
                << " rel_err=" << s.rel_err << " fits=" << s.fits;
    else
      std::cout << " missing (no successful fit)";
    std::cout << "\n";
  }
  std::cout << "results written to " << opt.out_dir << "\n";
  return kExitOk;
}

int cmd_check(const CliOptions& opt) {
  const auto results = qot::checks::run_suites(opt.suite);
  bool all_ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "pass" : "FAIL") << " " << r.name << ": "
              << r.detail << "\n";
    all_ok = all_ok && r.passed;
  }
  return all_ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadratically regularized optimal transport toolkit"};
  app.set_version_flag("--version", QOT_VERSION);
  app.require_subcommand(1);

  CliOptions opt;

  auto* gen = app.add_subcommand("generate",
                                 "generate benchmark instances from a config");
  gen->add_option("--config", opt.config_path, "JSON config path")->required();
  gen->add_option("--out", opt.out_dir, "output directory");
  gen->add_option("--seed", opt.seed, "override the config seed list");

  auto* solve = app.add_subcommand("solve", "solve one instance at one eps");
  solve->add_option("--instance", opt.instance_path, "instance JSON path")
      ->required();
  solve->add_option("--eps", opt.eps, "regularization strength")->required();
  auto* solve_solver =
      solve->add_option("--solver", opt.solver, "nlgs or ssn");
  solve->add_option("--init-tol", opt.init_tol, "relative marginal tolerance");
  solve->add_option("--tau", opt.tau, "support threshold");
  solve->add_option("--out", opt.out_dir, "output directory");

  auto* scale = app.add_subcommand("scale", "run the scaling experiment");
  scale->add_option("--config", opt.config_path, "scaling config JSON path");
  scale->add_option("--preset", opt.preset, "paper, desk or smoke1d");
  auto* scale_solver =
      scale->add_option("--solver", opt.solver, "nlgs or ssn");
  scale->add_option("--out", opt.out_dir, "output directory");
  scale->add_option("--jobs", opt.jobs, "worker count");
  scale->add_flag("--plot", opt.plot, "emit SVG panels");

  auto* check = app.add_subcommand("check", "run built-in verification suites");
  check->add_option("--suite", opt.suite,
                    "hinge, qp, gradient, lemmas or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalidInput;
  }

  try {
    if (gen->parsed()) return cmd_generate(opt);
    if (solve->parsed()) {
      (void)solve_solver;
      return cmd_solve(opt);
    }
    if (scale->parsed()) return cmd_scale(opt, scale_solver->count() > 0);
    if (check->parsed()) return cmd_check(opt);
  } catch (const qot::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const qot::SamplingFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSamplingFailure;
  } catch (const qot::NumericalFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }
  return kExitOk;
}
