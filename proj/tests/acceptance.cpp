// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion carries its own runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qot/core.hpp"
#include "qot/diagnostics.hpp"
#include "qot/experiments.hpp"
#include "qot/hinge.hpp"
#include "qot/oracles.hpp"
#include "qot/rng.hpp"
#include "qot/serialize.hpp"
#include "qot/solvers.hpp"
#include "qot/synthetic.hpp"

namespace fs = std::filesystem;
using namespace qot;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double uni(SplitMix64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

DiscreteProblem random_problem(SplitMix64& rng, Index n, Index m, double eps) {
  Vector a(n), b(m);
  for (Index i = 0; i < n; ++i) a[i] = uni(rng, 0.2, 1.0);
  for (Index j = 0; j < m; ++j) b[j] = uni(rng, 0.2, 1.0);
  RowMatrix c(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) c(i, j) = uni(rng, 0.0, 2.0);
  return DiscreteProblem(std::move(a), std::move(b), std::move(c), eps);
}

int hardware_jobs() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 2 : static_cast<int>(std::min(hc, 6u));
}

// 1. Hinge kernel exactness against the residual bound and the bisection
//    oracle on 10^4 random instances.
Outcome criterion1() {
  SplitMix64 rng(make_stream(101, 0, StreamRole::source));
  HingeScratch scratch;
  double worst_ratio = 0.0, worst_gap = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng() % 200);
    std::vector<double> y(m), w(m);
    double wy = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      y[j] = uni(rng, -10.0, 10.0);
      w[j] = uni(rng, 0.01, 10.0);
      wy += w[j] * std::abs(y[j]);
    }
    const double eps = uni(rng, 1e-6, 10.0);
    const double x = solve_weighted_hinge(y, w, eps, scratch);
    double resid = -eps;
    for (std::size_t j = 0; j < m; ++j)
      if (x > y[j]) resid += w[j] * (x - y[j]);
    worst_ratio = std::max(worst_ratio, std::abs(resid) / (1e-12 * (eps + wy)));
    worst_gap =
        std::max(worst_gap, std::abs(x - oracle::bisect_weighted_hinge(y, w, eps)));
  }
  std::ostringstream ss;
  ss << "10000 instances, worst residual " << worst_ratio
     << "x the bound, worst bisection gap " << worst_gap;
  return {worst_ratio <= 1.0 && worst_gap <= 1e-10, ss.str()};
}

// 2. Marginal feasibility identity on 100 random instances with eps spanning
//    six orders of magnitude.
Outcome criterion2() {
  SplitMix64 rng(make_stream(102, 0, StreamRole::source));
  int converged = 0;
  double worst_rel = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index n = 5 + static_cast<Index>(rng() % 31);
    const Index m = 5 + static_cast<Index>(rng() % 31);
    DiscreteProblem base = random_problem(rng, n, m, 1.0);
    const double eps =
        median_cost(base.cost) * std::pow(10.0, -6.0 * uniform_unit(rng));
    const DiscreteProblem p(base.a, base.b, base.cost, eps);
    SolverConfig cfg;
    cfg.init_tol = 1e-2;
    cfg.max_iters = t % 2 == 0 ? 200000 : 2000;
    const SolveResult res = t % 2 == 0 ? nlgs(p, cfg) : ssn(p, cfg);
    if (!res.stats.converged) continue;
    ++converged;
    const Vector rows = res.plan.row_sums();
    const Vector cols = res.plan.col_sums();
    for (Index i = 0; i < n; ++i)
      worst_rel = std::max(worst_rel, std::abs(rows[i] - p.a[i]) / p.a[i]);
    for (Index j = 0; j < m; ++j)
      worst_rel = std::max(worst_rel, std::abs(cols[j] - p.b[j]) / p.b[j]);
  }
  std::ostringstream ss;
  ss << converged << "/100 converged, worst relative marginal error "
     << worst_rel << " (tol 1e-2)";
  return {converged == 100 && worst_rel <= 1e-2 * (1.0 + 1e-9), ss.str()};
}

// 3. Both solvers against the projected-gradient QP oracle on 200 tiny
//    instances.
Outcome criterion3() {
  SplitMix64 rng(make_stream(103, 0, StreamRole::source));
  double worst_obj = 0.0, worst_plan = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Index n = 1 + static_cast<Index>(rng() % 4);
    const Index m = 1 + static_cast<Index>(rng() % (12 / n));
    const DiscreteProblem p = random_problem(rng, n, m, uni(rng, 0.05, 1.0));
    SolverConfig cfg;
    cfg.init_tol = 1e-10;
    const SolveResult rn = nlgs(p, cfg);
    const SolveResult rs = ssn(p, cfg);
    if (!rn.stats.converged || !rs.stats.converged)
      return {false, "a solver failed to converge on a tiny instance"};
    const auto qp = oracle::qp_transport_oracle(p);
    worst_obj = std::max(worst_obj,
                         std::abs(primal_objective(p, rn.plan) - qp.objective));
    worst_obj = std::max(worst_obj,
                         std::abs(primal_objective(p, rs.plan) - qp.objective));
    worst_plan =
        std::max(worst_plan, (rn.plan.dense() - qp.pi).cwiseAbs().maxCoeff());
    worst_plan =
        std::max(worst_plan, (rs.plan.dense() - qp.pi).cwiseAbs().maxCoeff());
  }
  std::ostringstream ss;
  ss << "200 instances, worst objective gap " << worst_obj
     << ", worst plan entry gap " << worst_plan;
  return {worst_obj <= 1e-8 && worst_plan <= 1e-6, ss.str()};
}

// 4. Dual gradient vs central finite differences at 500 non-kink points plus
//    the residual identity.
Outcome criterion4() {
  SplitMix64 rng(make_stream(104, 0, StreamRole::source));
  double worst_fd = 0.0, worst_id = 0.0;
  int done = 0;
  while (done < 500) {
    const Index n = 2 + static_cast<Index>(rng() % 6);
    const Index m = 2 + static_cast<Index>(rng() % 6);
    const DiscreteProblem p = random_problem(rng, n, m, uni(rng, 0.1, 1.0));
    DualPotentials pot{Vector(n), Vector(m)};
    for (Index i = 0; i < n; ++i) pot.f[i] = uni(rng, -1.0, 2.0);
    for (Index j = 0; j < m; ++j) pot.g[j] = uni(rng, -1.0, 2.0);
    double min_slack = 1e300;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j)
        min_slack =
            std::min(min_slack, std::abs(pot.f[i] + pot.g[j] - p.cost(i, j)));
    if (min_slack < 1e-3) continue;
    ++done;
    const Vector grad = dual_gradient(p, pot);
    const Vector fd = oracle::fd_dual_gradient(p, pot);
    worst_fd = std::max(worst_fd,
                        (grad - fd).cwiseAbs().maxCoeff() /
                            std::max(1.0, grad.cwiseAbs().maxCoeff()));
    const ResidualPair rr = residuals(p, pot);
    for (Index i = 0; i < n; ++i)
      worst_id = std::max(worst_id,
                          std::abs(grad[i] + p.a[i] * rr.r[i] / p.eps) /
                              std::max(1.0, std::abs(grad[i])));
    for (Index j = 0; j < m; ++j)
      worst_id = std::max(worst_id,
                          std::abs(grad[n + j] + p.b[j] * rr.s[j] / p.eps) /
                              std::max(1.0, std::abs(grad[n + j])));
  }
  std::ostringstream ss;
  ss << "500 non-kink points, worst FD error " << worst_fd
     << ", worst identity error " << worst_id;
  return {worst_fd <= 1e-5 && worst_id <= 1e-14, ss.str()};
}

// 5. Closed-form symmetric 2x2 instance: exact sparsity for eps <= 1/4 and
//    the interior solution at eps = 1/2.
Outcome criterion5() {
  Vector half = Vector::Constant(2, 0.5);
  RowMatrix cost(2, 2);
  cost << 0.0, 0.5, 0.5, 0.0;
  SolverConfig cfg;
  cfg.init_tol = 1e-10;
  for (double eps : {0.05, 0.1, 0.25}) {
    const DiscreteProblem p(half, half, cost, eps);
    for (const SolveResult& res : {nlgs(p, cfg), ssn(p, cfg)}) {
      if (!res.stats.converged) return {false, "solver did not converge"};
      if (res.plan.entries.size() != 2)
        return {false, "off-diagonal mass is not exactly zero at eps = " +
                           format_double(eps)};
      for (const auto& e : res.plan.entries) {
        if (e.i != e.j || std::abs(e.mass - 0.5) > 1e-12)
          return {false,
                  "diagonal masses are not 1/2 at eps = " + format_double(eps)};
      }
    }
  }
  const DiscreteProblem p(half, half, cost, 0.5);
  for (const SolveResult& res : {nlgs(p, cfg), ssn(p, cfg)}) {
    const RowMatrix dense = res.plan.dense();
    RowMatrix expect(2, 2);
    expect << 0.375, 0.125, 0.125, 0.375;
    const double gap = (dense - expect).cwiseAbs().maxCoeff();
    if (gap > 1e-8)
      return {false, "eps = 0.5 plan deviates by " + format_double(gap)};
  }
  return {true,
          "exact diag(1/2,1/2) for eps in {0.05,0.1,0.25}; interior plan "
          "matches to 1e-8 at eps = 0.5"};
}

// 6. Lemma inequality suites: graph-distance sandwich, value-gap control of
//    the mean-squared bias, Markov tails.
Outcome criterion6() {
  SplitMix64 rng(make_stream(106, 0, StreamRole::source));
  double sandwich_viol = -1e300;
  for (int t = 0; t < 10000; ++t) {
    const Index d = 1 + static_cast<Index>(rng() % 5);
    Eigen::MatrixXd B(d, d);
    for (Index i = 0; i < d * d; ++i) B.data()[i] = uni(rng, -1.0, 1.0);
    const Eigen::MatrixXd A =
        B * B.transpose() + 0.05 * Eigen::MatrixXd::Identity(d, d);
    Vector x(d), y(d), off(d);
    for (Index k = 0; k < d; ++k) {
      x[k] = uni(rng, -2.0, 2.0);
      y[k] = uni(rng, -2.0, 2.0);
      off[k] = uni(rng, -1.0, 1.0);
    }
    const double dist = dist_to_affine_graph(x, y, A, off);
    const double dev = (y - A * x - off).norm();
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A)
                            .eigenvalues()
                            .maxCoeff();
    sandwich_viol = std::max(sandwich_viol, dist - dev * (1.0 + 1e-12) - 1e-15);
    sandwich_viol = std::max(
        sandwich_viol,
        dev / std::sqrt(1.0 + lmax * lmax) * (1.0 - 1e-12) - 1e-15 - dist);
  }
  if (sandwich_viol > 0.0)
    return {false,
            "graph-distance sandwich violated by " + format_double(sandwich_viol)};

  double gap_viol = -1e300, markov_viol = -1e300;
  int solved = 0;
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + static_cast<int>(rng() % 5);
    const AffineBenchmark bench =
        make_affine_family(d, uni(rng, 1.0, 1.3), CovarianceModel::isotropic);
    const Index n = 10 + static_cast<Index>(rng() % 21);
    const EmpiricalInstance inst = generate_instance(
        bench, n, n, 1.0, 500 + static_cast<std::uint64_t>(t));
    const RowMatrix cost = quadratic_cost_matrix(inst.X, inst.Y);
    const double eps = median_cost(cost) * uni(rng, 3e-3, 3e-2);
    const DiscreteProblem p(inst.a, inst.b, cost, eps);
    SolverConfig cfg;
    cfg.init_tol = 1e-10;
    const SolveResult sol = ssn(p, cfg);
    if (!sol.stats.converged)
      return {false, "a fully paired instance did not converge"};
    ++solved;
    double cost_term = 0.0;
    for (const auto& e : sol.plan.entries) cost_term += cost(e.i, e.j) * e.mass;
    const double msb = mean_squared_bias(sol.plan, inst.X, inst.Y, bench);
    const double gap = cost_term - discrete_ot_paired(inst.X, inst.a, bench);
    gap_viol = std::max(gap_viol, msb - 2.0 * bench.lambda_max() * gap - 1e-10);
    for (int u = 1; u <= 20; ++u) {
      const double tt = 0.01 * static_cast<double>(u) * u;
      markov_viol = std::max(markov_viol,
                             tail_mass(sol.plan, inst.X, inst.Y, bench, tt) -
                                 msb / (tt * tt));
    }
  }
  std::ostringstream ss;
  ss << "sandwich margin " << -sandwich_viol << ", " << solved
     << "/50 paired solves, value-gap margin " << -gap_viol
     << ", markov margin " << -markov_viol;
  return {gap_viol <= 0.0 && markov_viol <= 1e-15, ss.str()};
}

// 7. Value-gap monotonicity in eps on a fixed fully paired instance.
Outcome criterion7() {
  const AffineBenchmark bench =
      make_affine_family(10, 1.00005, CovarianceModel::isotropic);
  const EmpiricalInstance inst = generate_instance(bench, 300, 300, 1.0, 1);
  const RowMatrix cost = quadratic_cost_matrix(inst.X, inst.Y);
  const double ot_ref = discrete_ot_paired(inst.X, inst.a, bench);
  const std::vector<double> grid =
      epsilon_grid(median_cost(cost), desk_relative_grid());
  std::vector<double> gaps;
  std::optional<DualPotentials> warm;
  for (double eps : grid) {
    const DiscreteProblem p(inst.a, inst.b, cost, eps);
    SolverConfig cfg;
    cfg.init_tol = 1e-4;
    const SolveResult res = ssn(p, cfg, warm);
    if (!res.stats.converged)
      return {false, "solve did not converge at eps = " + format_double(eps)};
    warm = res.potentials;
    gaps.push_back(value_gap(p, res.plan, ot_ref));
  }
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    if (!(gaps[k] > 0.0))
      return {false, "value gap not positive at grid point " + std::to_string(k)};
    if (k > 0 && gaps[k] < gaps[k - 1] * (1.0 - 1e-9))
      return {false, "value gap decreased between grid points " +
                         std::to_string(k - 1) + " and " + std::to_string(k)};
  }
  if (!(gaps.front() <= 0.01 * gaps.back()))
    return {false, "value gap does not shrink toward the grid minimum"};
  std::ostringstream ss;
  ss << "gap rises " << format_double(gaps.front()) << " -> "
     << format_double(gaps.back()) << " monotonically over 10 eps values";
  return {true, ss.str()};
}

// 8. 1D sharp-rate smoke test: self-transport family, fitted exponent within
//    the frozen band around the 1/3 rate.
Outcome criterion8() {
  ScalingConfig cfg;
  cfg.dims = {1};
  cfg.n_source = cfg.n_target = 300;
  cfg.base = 1.0;
  cfg.cov_model = CovarianceModel::isotropic;
  cfg.relative_eps_grid = paper_relative_grid();
  cfg.seeds = {1, 2, 3};
  cfg.solver = SolverKind::gauss_seidel;
  cfg.p_pair = 1.0;
  cfg.jobs = hardware_jobs();
  const ScalingReport rep = run_scaling(cfg);
  const DimSummary& s = rep.dim_summaries.at(0);
  if (!s.ok || s.fits != 3) return {false, "fits missing"};
  std::ostringstream ss;
  ss << "mean beta " << s.beta_mean << " (std " << s.beta_std
     << ") vs band [0.25, 0.45]";
  return {s.beta_mean >= 0.25 && s.beta_mean <= 0.45, ss.str()};
}

// 9. Desk-scale scaling trend: positive exponents, nonincreasing in d with
//    at most one adjacent inversion, and solver agreement within 0.02.
Outcome criterion9() {
  ScalingConfig cfg;
  cfg.dims = {10, 20, 50};
  cfg.n_source = cfg.n_target = 300;
  cfg.base = 1.00005;
  cfg.cov_model = CovarianceModel::isotropic;
  cfg.relative_eps_grid = desk_relative_grid();
  cfg.seeds = {1, 2, 3};
  cfg.jobs = hardware_jobs();

  cfg.solver = SolverKind::gauss_seidel;
  const ScalingReport gs = run_scaling(cfg);
  cfg.solver = SolverKind::semismooth_newton;
  const ScalingReport sn = run_scaling(cfg);

  for (const ScalingReport* rep : {&gs, &sn}) {
    std::vector<double> betas;
    for (const auto& s : rep->dim_summaries) {
      if (!s.ok) return {false, "a dimension is missing"};
      if (!(s.beta_mean > 0.0))
        return {false, "mean exponent not strictly positive at d = " +
                           std::to_string(s.d)};
      betas.push_back(s.beta_mean);
    }
    int inversions = 0;
    for (std::size_t k = 1; k < betas.size(); ++k)
      if (betas[k] > betas[k - 1]) ++inversions;
    if (inversions > 1)
      return {false, "trend has more than one adjacent inversion"};
  }
  for (std::size_t k = 0; k < gs.dim_summaries.size(); ++k) {
    const double diff = std::abs(gs.dim_summaries[k].beta_mean -
                                 sn.dim_summaries[k].beta_mean);
    if (diff > 0.02)
      return {false, "solver disagreement " + format_double(diff) +
                         " at d = " + std::to_string(gs.dim_summaries[k].d)};
  }
  std::ostringstream ss;
  ss << "gauss_seidel betas";
  for (const auto& s : gs.dim_summaries) ss << " " << s.beta_mean;
  ss << "; semismooth_newton betas";
  for (const auto& s : sn.dim_summaries) ss << " " << s.beta_mean;
  return {true, ss.str()};
}

// 10. CLI determinism: identical config, different worker counts, byte
//     identical result CSVs.
Outcome criterion10() {
  const fs::path dir = "acceptance_tmp";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"schema_version":1,"dims":[5,8],"seeds":[1,2],"N":120,)"
        << R"("M":120,"covariance":"isotropic","base":1.01,"p_pair":0.5,)"
        << R"("relative_eps_grid":[1e-5,1e-4,1e-3,1e-2,1e-1],)"
        << R"("solver":"semismooth_newton"})";
  }
  auto invoke = [&](const std::string& out, int jobs) {
    const std::string cmd = std::string(QOT_CLI_PATH) + " scale --config " +
                            (dir / "cfg.json").string() + " --out " +
                            (dir / out).string() + " --jobs " +
                            std::to_string(jobs) + " > " +
                            (dir / (out + ".log")).string() + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  if (invoke("a", 1) != 0 || invoke("b", hardware_jobs()) != 0)
    return {false, "cli scale run failed"};
  const std::string runs_a = read_file(dir / "a" / "runs.csv");
  const std::string runs_b = read_file(dir / "b" / "runs.csv");
  const std::string sum_a = read_file(dir / "a" / "summary.csv");
  const std::string sum_b = read_file(dir / "b" / "summary.csv");
  if (runs_a != runs_b) return {false, "runs.csv differs across worker counts"};
  if (sum_a != sum_b) return {false, "summary.csv differs across worker counts"};
  std::ostringstream ss;
  ss << "byte-identical CSVs (" << runs_a.size() << " and " << sum_a.size()
     << " bytes) for jobs 1 vs " << hardware_jobs();
  return {true, ss.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "hinge kernel exactness", 5.0, criterion1},
      {2, "marginal feasibility identity", 30.0, criterion2},
      {3, "qp oracle equivalence", 60.0, criterion3},
      {4, "dual gradient check", 10.0, criterion4},
      {5, "closed-form 2x2 instance", 1.0, criterion5},
      {6, "lemma inequality suites", 60.0, criterion6},
      {7, "value-gap monotonicity", 120.0, criterion7},
      {8, "1d sharp-rate smoke test", 180.0, criterion8},
      {9, "scaling trend at desk scale", 900.0, criterion9},
      {10, "determinism across worker counts", 300.0, criterion10},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = out.pass && in_budget;
    if (!pass) ++failures;
    std::printf("criterion %2d %s (%.2f s%s) %s: %s\n", c.id,
                pass ? "PASS" : "FAIL", secs, in_budget ? "" : ", over budget",
                c.name, out.detail.c_str());
    std::fflush(stdout);
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
