#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "qot/core.hpp"
#include "qot/errors.hpp"
#include "qot/synthetic.hpp"

namespace qot {

namespace detail {
inline void check_plan_shape(const CouplingPlan& plan, const RowMatrix& X,
                             const RowMatrix& Y) {
  if (plan.n_rows != X.rows() || plan.n_cols != Y.rows())
    throw InvalidInput("plan shape does not match point clouds");
}

inline double pair_deviation(const RowMatrix& X, const RowMatrix& Y,
                             const AffineBenchmark& bench, Index i, Index j) {
  double acc = 0.0;
  for (Index k = 0; k < X.cols(); ++k) {
    const double t = bench.a_diag[k] * X(i, k) + bench.scale * bench.a_off[k];
    const double diff = Y(j, k) - t;
    acc += diff * diff;
  }
  return acc;
}
}  // namespace detail

/// max over {pi_ij > tau} of ||y_j - T(x_i)||; 0 when the thresholded
/// support is empty.
inline double bias_proxy(const CouplingPlan& plan, const RowMatrix& X,
                         const RowMatrix& Y, const AffineBenchmark& bench,
                         double tau) {
  detail::check_plan_shape(plan, X, Y);
  if (tau < 0.0) throw InvalidInput("bias_proxy: tau must be >= 0");
  double best = 0.0;
  for (const auto& e : plan.entries)
    if (e.mass > tau)
      best = std::max(best, detail::pair_deviation(X, Y, bench, e.i, e.j));
  return std::sqrt(best);
}

/// sum pi_ij ||y_j - T(x_i)||^2 over the stored support.
inline double mean_squared_bias(const CouplingPlan& plan, const RowMatrix& X,
                                const RowMatrix& Y,
                                const AffineBenchmark& bench) {
  detail::check_plan_shape(plan, X, Y);
  double acc = 0.0;
  for (const auto& e : plan.entries)
    acc += e.mass * detail::pair_deviation(X, Y, bench, e.i, e.j);
  return acc;
}

/// Unregularized transport value of the fully paired instance: the pairing
/// (x_i, T(x_i)) is optimal because T is the gradient of a convex quadratic.
inline double discrete_ot_paired(const RowMatrix& X, const Vector& a,
                                 const AffineBenchmark& bench) {
  if (X.rows() != a.size())
    throw InvalidInput("discrete_ot_paired: weight length mismatch");
  double acc = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    double dist2 = 0.0;
    for (Index k = 0; k < X.cols(); ++k) {
      const double t =
          bench.a_diag[k] * X(i, k) + bench.scale * bench.a_off[k];
      const double diff = X(i, k) - t;
      dist2 += diff * diff;
    }
    acc += a[i] * 0.5 * dist2;
  }
  return acc;
}

/// primal value of the plan minus the unregularized reference optimum.
inline double value_gap(const DiscreteProblem& problem,
                        const CouplingPlan& plan, double ot_ref) {
  return primal_objective(problem, plan) - ot_ref;
}

/// Exact distance from (x, y) to the graph {(x', A x' + a)}: the nearest
/// graph point solves (I + A^2) x' = x + A (y - a).
inline double dist_to_affine_graph(const Vector& x, const Vector& y,
                                   const Eigen::MatrixXd& A,
                                   const Vector& a_off) {
  const Index d = x.size();
  if (y.size() != d || A.rows() != d || A.cols() != d || a_off.size() != d)
    throw InvalidInput("dist_to_affine_graph: dimension mismatch");
  const Eigen::MatrixXd lhs =
      Eigen::MatrixXd::Identity(d, d) + A * A;
  const Vector rhs = x + A * (y - a_off);
  const Vector xp = Eigen::LDLT<Eigen::MatrixXd>(lhs).solve(rhs);
  const Vector res_y = y - A * xp - a_off;
  return std::sqrt((x - xp).squaredNorm() + res_y.squaredNorm());
}

/// Diagonal fast path: the normal system decouples per coordinate.
inline double dist_to_affine_graph_diag(const Vector& x, const Vector& y,
                                        const Vector& a_diag,
                                        const Vector& a_off) {
  const Index d = x.size();
  double acc = 0.0;
  for (Index k = 0; k < d; ++k) {
    const double ak = a_diag[k];
    const double xp = (x[k] + ak * (y[k] - a_off[k])) / (1.0 + ak * ak);
    const double dx = x[k] - xp;
    const double dy = y[k] - ak * xp - a_off[k];
    acc += dx * dx + dy * dy;
  }
  return std::sqrt(acc);
}

/// max over the thresholded support of the exact distance to the Monge
/// graph (directed Hausdorff distance of the discrete support).
inline double directed_hausdorff_to_graph(const CouplingPlan& plan,
                                          const RowMatrix& X,
                                          const RowMatrix& Y,
                                          const AffineBenchmark& bench,
                                          double tau) {
  detail::check_plan_shape(plan, X, Y);
  const Vector scaled_off = bench.scale * bench.a_off;
  double best = 0.0;
  for (const auto& e : plan.entries) {
    if (e.mass <= tau) continue;
    best = std::max(
        best, dist_to_affine_graph_diag(X.row(e.i).transpose(),
                                        Y.row(e.j).transpose(), bench.a_diag,
                                        scaled_off));
  }
  return best;
}

/// Per-row diameter of the active target set {y_j : pi_ij > tau}.
inline Vector fiber_thickness(const CouplingPlan& plan, const RowMatrix& Y,
                              double tau) {
  if (plan.n_cols != Y.rows())
    throw InvalidInput("fiber_thickness: plan/target mismatch");
  Vector out = Vector::Zero(plan.n_rows);
  std::vector<Index> active;
  std::size_t pos = 0;
  for (Index i = 0; i < plan.n_rows; ++i) {
    active.clear();
    while (pos < plan.entries.size() && plan.entries[pos].i == i) {
      if (plan.entries[pos].mass > tau) active.push_back(plan.entries[pos].j);
      ++pos;
    }
    double diam2 = 0.0;
    for (std::size_t u = 0; u < active.size(); ++u)
      for (std::size_t v = u + 1; v < active.size(); ++v)
        diam2 = std::max(
            diam2, (Y.row(active[u]) - Y.row(active[v])).squaredNorm());
    out[i] = std::sqrt(diam2);
  }
  return out;
}

/// Plan mass at deviation >= t from the Monge map.
inline double tail_mass(const CouplingPlan& plan, const RowMatrix& X,
                        const RowMatrix& Y, const AffineBenchmark& bench,
                        double t) {
  detail::check_plan_shape(plan, X, Y);
  if (t < 0.0) throw InvalidInput("tail_mass: t must be >= 0");
  const double t2 = t * t;
  double acc = 0.0;
  for (const auto& e : plan.entries)
    if (detail::pair_deviation(X, Y, bench, e.i, e.j) >= t2) acc += e.mass;
  return acc;
}

}  // namespace qot
