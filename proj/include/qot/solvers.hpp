#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qot/core.hpp"
#include "qot/errors.hpp"
#include "qot/hinge.hpp"

namespace qot {

struct SolverConfig {
  Index max_iters = 20000;      // sweeps (NLGS) or Newton steps (SSN)
  double init_tol = 1e-2;       // stop when max residual <= init_tol * eps
  double newton_lambda = 1e-10; // relative Newton regularization scale
  double armijo_theta = 1e-4;
  double armijo_xi = 0.5;
  double min_step = 1e-12;

  void validate() const {
    if (max_iters < 1) throw InvalidInput("SolverConfig: max_iters must be >= 1");
    if (!(init_tol > 0.0)) throw InvalidInput("SolverConfig: init_tol must be > 0");
    if (!(newton_lambda > 0.0))
      throw InvalidInput("SolverConfig: newton_lambda must be > 0");
    if (!(armijo_theta > 0.0 && armijo_theta < 1.0))
      throw InvalidInput("SolverConfig: armijo_theta must be in (0,1)");
    if (!(armijo_xi > 0.0 && armijo_xi < 1.0))
      throw InvalidInput("SolverConfig: armijo_xi must be in (0,1)");
    if (!(min_step > 0.0)) throw InvalidInput("SolverConfig: min_step must be > 0");
  }
};

struct SolveStats {
  Index iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> dual_objective_trace;
  double wall_time = 0.0;
};

struct SolveResult {
  DualPotentials potentials;
  CouplingPlan plan;
  SolveStats stats;
};

inline double stopping_tolerance(double eps, const SolverConfig& config) {
  if (!(eps > 0.0)) throw InvalidInput("stopping_tolerance: eps must be > 0");
  return config.init_tol * eps;
}

namespace detail {

struct IterateState {
  ResidualPair res;
  double quad = 0.0;  // sum a_i b_j [slack]_+^2
  double phi = 0.0;   // dual-minimization functional
};

/// Residuals and the dual functional in one pass over the cost matrix.
inline IterateState iterate_state(const DiscreteProblem& p, const Vector& f,
                                  const Vector& g) {
  const Index n = p.rows(), m = p.cols();
  IterateState st;
  st.res.r = Vector::Constant(n, -p.eps);
  st.res.s = Vector::Constant(m, -p.eps);
  for (Index i = 0; i < n; ++i) {
    const double fi = f[i];
    const double ai = p.a[i];
    const double* ci = p.cost.data() + i * m;
    double row = 0.0, qrow = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double slack = fi + g[j] - ci[j];
      if (slack > 0.0) {
        row += p.b[j] * slack;
        qrow += p.b[j] * slack * slack;
        st.res.s[j] += ai * slack;
      }
    }
    st.res.r[i] += row;
    st.quad += ai * qrow;
  }
  st.phi = st.quad / (2.0 * p.eps) - p.a.dot(f) - p.b.dot(g);
  return st;
}

inline double phi_value(const DiscreteProblem& p, const Vector& f,
                        const Vector& g) {
  const Index n = p.rows(), m = p.cols();
  double quad = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double fi = f[i];
    const double* ci = p.cost.data() + i * m;
    double qrow = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double slack = fi + g[j] - ci[j];
      if (slack > 0.0) qrow += p.b[j] * slack * slack;
    }
    quad += p.a[i] * qrow;
  }
  return quad / (2.0 * p.eps) - p.a.dot(f) - p.b.dot(g);
}

struct NlgsWorkspace {
  RowMatrix cost_t;  // transposed copy so column sweeps read contiguously
  std::vector<double> vals;
  HingeScratch scratch;

  explicit NlgsWorkspace(const DiscreteProblem& p)
      : cost_t(p.cost.transpose()),
        vals(static_cast<std::size_t>(std::max(p.rows(), p.cols()))) {
    scratch.reserve(vals.size());
  }
};

/// One full sweep: exact row maximizations, exact column maximizations,
/// then the gauge fix.
inline void nlgs_sweep(const DiscreteProblem& p, Vector& f, Vector& g,
                       NlgsWorkspace& ws) {
  const Index n = p.rows(), m = p.cols();
  const std::span<const double> aw(p.a.data(), static_cast<std::size_t>(n));
  const std::span<const double> bw(p.b.data(), static_cast<std::size_t>(m));
  for (Index i = 0; i < n; ++i) {
    const double* ci = p.cost.data() + i * m;
    for (Index j = 0; j < m; ++j) ws.vals[static_cast<std::size_t>(j)] = ci[j] - g[j];
    f[i] = solve_weighted_hinge(
        std::span<const double>(ws.vals.data(), static_cast<std::size_t>(m)),
        bw, p.eps, ws.scratch);
  }
  for (Index j = 0; j < m; ++j) {
    const double* cj = ws.cost_t.data() + j * n;
    for (Index i = 0; i < n; ++i) ws.vals[static_cast<std::size_t>(i)] = cj[i] - f[i];
    g[j] = solve_weighted_hinge(
        std::span<const double>(ws.vals.data(), static_cast<std::size_t>(n)),
        aw, p.eps, ws.scratch);
  }
  const double kappa = p.a.dot(f);
  f.array() -= kappa;
  g.array() += kappa;
}

}  // namespace detail

/// Nonlinear Gauss-Seidel on the marginal system: alternating exact hinge
/// solves per row and column until the residual rule is met.
inline SolveResult nlgs(const DiscreteProblem& problem,
                        const SolverConfig& config,
                        const std::optional<Vector>& g0 = std::nullopt) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = problem.rows(), m = problem.cols();
  Vector f = Vector::Zero(n);
  Vector g = Vector::Zero(m);
  if (g0) {
    if (g0->size() != m) throw InvalidInput("nlgs: g0 length mismatch");
    g = *g0;
  }
  detail::NlgsWorkspace ws(problem);
  const double tol = stopping_tolerance(problem.eps, config);

  SolveResult out;
  out.stats.dual_objective_trace.reserve(64);
  for (Index k = 0; k < config.max_iters; ++k) {
    detail::nlgs_sweep(problem, f, g, ws);
    const detail::IterateState st = detail::iterate_state(problem, f, g);
    out.stats.iterations = k + 1;
    out.stats.final_residual = st.res.max_abs();
    out.stats.dual_objective_trace.push_back(-st.phi);
    if (out.stats.final_residual <= tol) {
      out.stats.converged = true;
      break;
    }
  }
  out.potentials = {std::move(f), std::move(g)};
  out.plan = kkt_plan(problem, out.potentials);
  out.stats.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

/// Newton derivative of the residual map at (f, g): with the activity mask
/// sigma_ij = 1{f_i + g_j > c_ij}, blocks
///   [ diag(sum_j b_j sigma_ij)   (b_j sigma_ij)            ]
///   [ (a_i sigma_ij)^T           diag(sum_i a_i sigma_ij)  ].
inline Eigen::MatrixXd newton_matrix(const DiscreteProblem& p,
                                     const DualPotentials& pot) {
  detail::check_dims(p, pot);
  const Index n = p.rows(), m = p.cols();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n + m, n + m);
  for (Index i = 0; i < n; ++i) {
    const double* ci = p.cost.data() + i * m;
    for (Index j = 0; j < m; ++j) {
      if (pot.f[i] + pot.g[j] - ci[j] > 0.0) {
        G(i, i) += p.b[j];
        G(i, n + j) = p.b[j];
        G(n + j, i) = p.a[i];
        G(n + j, n + j) += p.a[i];
      }
    }
  }
  return G;
}

namespace detail {

/// Active set in CSR form together with the symmetrized off-diagonal values
/// sigma_ij sqrt(a_i b_j). D^(1/2) (G + lambda I) D^(-1/2) is symmetric
/// positive definite, so the regularized Newton system is solved in that
/// similarity frame.
struct ActiveSet {
  std::vector<Index> row_ptr;
  std::vector<Index> col;
  std::vector<double> sqab;
  Vector row_weight;  // sum_j b_j sigma_ij
  Vector col_weight;  // sum_i a_i sigma_ij
};

inline ActiveSet build_active_set(const DiscreteProblem& p, const Vector& f,
                                  const Vector& g) {
  const Index n = p.rows(), m = p.cols();
  ActiveSet act;
  act.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  act.row_weight = Vector::Zero(n);
  act.col_weight = Vector::Zero(m);
  Vector sqa = p.a.cwiseSqrt(), sqb = p.b.cwiseSqrt();
  for (Index i = 0; i < n; ++i) {
    const double fi = f[i];
    const double* ci = p.cost.data() + i * m;
    for (Index j = 0; j < m; ++j) {
      if (fi + g[j] - ci[j] > 0.0) {
        act.col.push_back(j);
        act.sqab.push_back(sqa[i] * sqb[j]);
        act.row_weight[i] += p.b[j];
        act.col_weight[j] += p.a[i];
      }
    }
    act.row_ptr[static_cast<std::size_t>(i) + 1] =
        static_cast<Index>(act.col.size());
  }
  return act;
}

inline void apply_sym_operator(const ActiveSet& act, double lambda,
                               const Vector& v, Vector& out) {
  const Index n = act.row_weight.size();
  const Index m = act.col_weight.size();
  out.head(n) = (act.row_weight.array() + lambda) * v.head(n).array();
  out.tail(m) = (act.col_weight.array() + lambda) * v.tail(m).array();
  for (Index i = 0; i < n; ++i) {
    double acc = 0.0;
    const double vi = v[i];
    for (Index k = act.row_ptr[static_cast<std::size_t>(i)];
         k < act.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      const Index j = act.col[static_cast<std::size_t>(k)];
      const double w = act.sqab[static_cast<std::size_t>(k)];
      acc += w * v[n + j];
      out[n + j] += w * vi;
    }
    out[i] += acc;
  }
}

/// Jacobi-preconditioned CG on the symmetric regularized system.
inline Vector solve_newton_cg(const ActiveSet& act, double lambda,
                              const Vector& rhs) {
  const Index dim = rhs.size();
  const Index n = act.row_weight.size();
  Vector diag(dim);
  diag.head(n) = act.row_weight.array() + lambda;
  diag.tail(dim - n) = act.col_weight.array() + lambda;
  Vector x = Vector::Zero(dim), r = rhs, z = r.cwiseQuotient(diag), p = z,
         Ap(dim);
  double rz = r.dot(z);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return x;
  const Index max_it = 10 * dim;
  for (Index it = 0; it < max_it; ++it) {
    apply_sym_operator(act, lambda, p, Ap);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0))
      throw NumericalFailure("ssn: conjugate gradient breakdown");
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    if (r.norm() <= 1e-10 * rhs_norm) return x;
    z = r.cwiseQuotient(diag);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw NumericalFailure("ssn: conjugate gradient did not converge");
}

inline Vector solve_newton_dense(const ActiveSet& act, double lambda,
                                 const Vector& rhs) {
  const Index n = act.row_weight.size();
  const Index m = act.col_weight.size();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n + m, n + m);
  for (Index i = 0; i < n; ++i) S(i, i) = act.row_weight[i] + lambda;
  for (Index j = 0; j < m; ++j) S(n + j, n + j) = act.col_weight[j] + lambda;
  for (Index i = 0; i < n; ++i) {
    for (Index k = act.row_ptr[static_cast<std::size_t>(i)];
         k < act.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      const Index j = act.col[static_cast<std::size_t>(k)];
      const double w = act.sqab[static_cast<std::size_t>(k)];
      S(i, n + j) = w;
      S(n + j, i) = w;
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success)
    throw NumericalFailure("ssn: dense factorization failed");
  return ldlt.solve(rhs);
}

}  // namespace detail

/// Globalized, regularized semismooth Newton on the KKT residual map, with
/// Armijo backtracking on the dual-minimization functional. Warm start
/// defaults to one Gauss-Seidel sweep.
inline SolveResult ssn(const DiscreteProblem& problem,
                       const SolverConfig& config,
                       const std::optional<DualPotentials>& warm = std::nullopt) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = problem.rows(), m = problem.cols();
  Vector f, g;
  if (warm) {
    if (warm->f.size() != n || warm->g.size() != m)
      throw InvalidInput("ssn: warm start dimension mismatch");
    const DualPotentials fixed = gauge_fix(*warm, problem.a);
    f = fixed.f;
    g = fixed.g;
  } else {
    f = Vector::Zero(n);
    g = Vector::Zero(m);
    detail::NlgsWorkspace ws(problem);
    detail::nlgs_sweep(problem, f, g, ws);
  }
  const double tol = stopping_tolerance(problem.eps, config);

  SolveResult out;
  detail::IterateState st = detail::iterate_state(problem, f, g);
  out.stats.dual_objective_trace.push_back(-st.phi);
  out.stats.final_residual = st.res.max_abs();
  out.stats.converged = out.stats.final_residual <= tol;

  while (!out.stats.converged && out.stats.iterations < config.max_iters) {
    const detail::ActiveSet act = detail::build_active_set(problem, f, g);
    const double trace = act.row_weight.sum() + act.col_weight.sum();
    const double lambda =
        std::max(config.newton_lambda * trace / static_cast<double>(n + m),
                 1e-12);
    Vector rhs(n + m);
    rhs.head(n) = -problem.a.cwiseSqrt().cwiseProduct(st.res.r);
    rhs.tail(m) = -problem.b.cwiseSqrt().cwiseProduct(st.res.s);
    const Vector u = (n + m <= 1200)
                         ? detail::solve_newton_dense(act, lambda, rhs)
                         : detail::solve_newton_cg(act, lambda, rhs);
    const Vector df = u.head(n).cwiseQuotient(problem.a.cwiseSqrt());
    const Vector dg = u.tail(m).cwiseQuotient(problem.b.cwiseSqrt());

    // Directional derivative of the functional along the step; equals the
    // paper's plan-weighted form through the row-sum identity.
    const double dir =
        (problem.a.cwiseProduct(st.res.r).dot(df) +
         problem.b.cwiseProduct(st.res.s).dot(dg)) /
        problem.eps;
    if (!(dir < 0.0)) {
      out.stats.converged = false;
      break;
    }
    double t = 1.0;
    bool underflow = false;
    while (detail::phi_value(problem, f + t * df, g + t * dg) >
           st.phi + config.armijo_theta * t * dir) {
      t *= config.armijo_xi;
      if (t < config.min_step) {
        underflow = true;
        break;
      }
    }
    if (underflow) {
      out.stats.converged = false;
      break;
    }
    f += t * df;
    g += t * dg;
    const double kappa = problem.a.dot(f);
    f.array() -= kappa;
    g.array() += kappa;
    st = detail::iterate_state(problem, f, g);
    out.stats.iterations += 1;
    out.stats.final_residual = st.res.max_abs();
    out.stats.dual_objective_trace.push_back(-st.phi);
    out.stats.converged = out.stats.final_residual <= tol;
  }

  out.potentials = {std::move(f), std::move(g)};
  out.plan = kkt_plan(problem, out.potentials);
  out.stats.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace qot
