#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "qot/errors.hpp"

namespace qot {

using Index = Eigen::Index;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

namespace detail {
inline bool all_finite(const Vector& v) { return v.allFinite(); }
}  // namespace detail

/// Discrete problem data: probability weights a, b, dense row-major cost
/// matrix and the regularization strength. Weights are renormalized to sum
/// to one at construction. Immutable after construction.
struct DiscreteProblem {
  Vector a;
  Vector b;
  RowMatrix cost;
  double eps = 0.0;

  DiscreteProblem(Vector a_in, Vector b_in, RowMatrix cost_in, double eps_in)
      : a(std::move(a_in)), b(std::move(b_in)), cost(std::move(cost_in)),
        eps(eps_in) {
    if (a.size() == 0 || b.size() == 0)
      throw InvalidInput("DiscreteProblem: empty marginal weights");
    if (cost.rows() != a.size() || cost.cols() != b.size())
      throw InvalidInput("DiscreteProblem: cost shape does not match weights");
    if (!(a.minCoeff() > 0.0) || !detail::all_finite(a))
      throw InvalidInput("DiscreteProblem: source weights must be finite and > 0");
    if (!(b.minCoeff() > 0.0) || !detail::all_finite(b))
      throw InvalidInput("DiscreteProblem: target weights must be finite and > 0");
    if (!cost.allFinite() || cost.minCoeff() < 0.0)
      throw InvalidInput("DiscreteProblem: costs must be finite and >= 0");
    if (!(eps > 0.0) || !std::isfinite(eps))
      throw InvalidInput("DiscreteProblem: eps must be finite and > 0");
    a /= a.sum();
    b /= b.sum();
  }

  Index rows() const { return a.size(); }
  Index cols() const { return b.size(); }
};

/// Dual vectors (f, g). The hinge slack f_i + g_j - c_ij determines the plan.
struct DualPotentials {
  Vector f;
  Vector g;
};

struct PlanEntry {
  Index i;
  Index j;
  double mass;
};

/// Sparse coupling: strictly positive entries in row-major order.
struct CouplingPlan {
  std::vector<PlanEntry> entries;
  Index n_rows = 0;
  Index n_cols = 0;

  double total_mass() const {
    double t = 0.0;
    for (const auto& e : entries) t += e.mass;
    return t;
  }

  Vector row_sums() const {
    Vector r = Vector::Zero(n_rows);
    for (const auto& e : entries) r[e.i] += e.mass;
    return r;
  }

  Vector col_sums() const {
    Vector c = Vector::Zero(n_cols);
    for (const auto& e : entries) c[e.j] += e.mass;
    return c;
  }

  RowMatrix dense() const {
    RowMatrix m = RowMatrix::Zero(n_rows, n_cols);
    for (const auto& e : entries) m(e.i, e.j) = e.mass;
    return m;
  }
};

/// Marginal residuals r_i = sum_j b_j [f_i+g_j-c_ij]_+ - eps and the column
/// analogue; zero exactly at a dual solution.
struct ResidualPair {
  Vector r;
  Vector s;

  double max_abs() const {
    const double mr = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    const double ms = s.size() ? s.cwiseAbs().maxCoeff() : 0.0;
    return mr > ms ? mr : ms;
  }
};

/// c_ij = 0.5 * ||x_i - y_j||^2, accumulated coordinate-wise so that
/// coincident points give an exact zero.
inline RowMatrix quadratic_cost_matrix(const RowMatrix& X, const RowMatrix& Y) {
  if (X.rows() == 0 || Y.rows() == 0)
    throw InvalidInput("quadratic_cost_matrix: empty point list");
  if (X.cols() != Y.cols())
    throw InvalidInput("quadratic_cost_matrix: ambient dimension mismatch");
  if (!X.allFinite() || !Y.allFinite())
    throw InvalidInput("quadratic_cost_matrix: non-finite coordinates");
  const Index n = X.rows(), m = Y.rows(), d = X.cols();
  RowMatrix c(n, m);
  for (Index i = 0; i < n; ++i) {
    const double* xi = X.data() + i * d;
    double* ci = c.data() + i * m;
    for (Index j = 0; j < m; ++j) {
      const double* yj = Y.data() + j * d;
      double acc = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double diff = xi[k] - yj[k];
        acc += diff * diff;
      }
      ci[j] = 0.5 * acc;
    }
  }
  return c;
}

namespace detail {
inline void check_dims(const DiscreteProblem& p, const DualPotentials& pot) {
  if (pot.f.size() != p.rows() || pot.g.size() != p.cols())
    throw InvalidInput("potentials do not match problem dimensions");
}
}  // namespace detail

/// pi_ij = (a_i b_j / eps) [f_i + g_j - c_ij]_+ ; only positive entries kept.
inline CouplingPlan kkt_plan(const DiscreteProblem& p,
                             const DualPotentials& pot) {
  detail::check_dims(p, pot);
  const Index n = p.rows(), m = p.cols();
  CouplingPlan plan;
  plan.n_rows = n;
  plan.n_cols = m;
  for (Index i = 0; i < n; ++i) {
    const double fi = pot.f[i];
    const double ai = p.a[i];
    const double* ci = p.cost.data() + i * m;
    for (Index j = 0; j < m; ++j) {
      const double slack = fi + pot.g[j] - ci[j];
      if (slack > 0.0)
        plan.entries.push_back({i, j, ai * p.b[j] * slack / p.eps});
    }
  }
  return plan;
}

inline ResidualPair residuals(const DiscreteProblem& p,
                              const DualPotentials& pot) {
  detail::check_dims(p, pot);
  const Index n = p.rows(), m = p.cols();
  ResidualPair res;
  res.r = Vector::Constant(n, -p.eps);
  res.s = Vector::Constant(m, -p.eps);
  for (Index i = 0; i < n; ++i) {
    const double fi = pot.f[i];
    const double* ci = p.cost.data() + i * m;
    double row = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double slack = fi + pot.g[j] - ci[j];
      if (slack > 0.0) {
        row += p.b[j] * slack;
        res.s[j] += p.a[i] * slack;
      }
    }
    res.r[i] += row;
  }
  return res;
}

/// sum c_ij pi_ij + (eps/2) sum pi_ij^2 / (a_i b_j)
inline double primal_objective(const DiscreteProblem& p,
                               const CouplingPlan& plan) {
  if (plan.n_rows != p.rows() || plan.n_cols != p.cols())
    throw InvalidInput("plan shape does not match problem");
  double cost_term = 0.0, penalty = 0.0;
  for (const auto& e : plan.entries) {
    cost_term += p.cost(e.i, e.j) * e.mass;
    penalty += e.mass * e.mass / (p.a[e.i] * p.b[e.j]);
  }
  return cost_term + 0.5 * p.eps * penalty;
}

/// Concave dual: sum a_i f_i + sum b_j g_j - (1/2eps) sum a_i b_j [slack]_+^2.
inline double dual_objective(const DiscreteProblem& p,
                             const DualPotentials& pot) {
  detail::check_dims(p, pot);
  const Index n = p.rows(), m = p.cols();
  double quad = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double fi = pot.f[i];
    const double* ci = p.cost.data() + i * m;
    double row = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double slack = fi + pot.g[j] - ci[j];
      if (slack > 0.0) row += p.b[j] * slack * slack;
    }
    quad += p.a[i] * row;
  }
  return p.a.dot(pot.f) + p.b.dot(pot.g) - quad / (2.0 * p.eps);
}

/// Gradient of the dual objective, stacked (df, dg); component i equals
/// -(a_i/eps) r_i.
inline Vector dual_gradient(const DiscreteProblem& p,
                            const DualPotentials& pot) {
  const ResidualPair res = residuals(p, pot);
  const Index n = p.rows(), m = p.cols();
  Vector grad(n + m);
  for (Index i = 0; i < n; ++i) grad[i] = -p.a[i] * res.r[i] / p.eps;
  for (Index j = 0; j < m; ++j) grad[n + j] = -p.b[j] * res.s[j] / p.eps;
  return grad;
}

/// Pairs with mass strictly above tau.
inline std::vector<std::pair<Index, Index>> support(const CouplingPlan& plan,
                                                    double tau) {
  if (tau < 0.0) throw InvalidInput("support: tau must be >= 0");
  std::vector<std::pair<Index, Index>> out;
  for (const auto& e : plan.entries)
    if (e.mass > tau) out.emplace_back(e.i, e.j);
  return out;
}

/// Shift (f - kappa, g + kappa) with kappa = sum a_i f_i, removing the dual
/// shift invariance; hinge slacks are unchanged.
inline DualPotentials gauge_fix(const DualPotentials& pot, const Vector& a) {
  if (pot.f.size() != a.size())
    throw InvalidInput("gauge_fix: weight length mismatch");
  const double kappa = a.dot(pot.f);
  return {pot.f.array() - kappa, pot.g.array() + kappa};
}

}  // namespace qot
