#pragma once

// Independent reference computations used by verification suites and tests.
// Nothing here shares code with the production solve paths: the hinge oracle
// bisects the monotone residual, and the QP oracle runs projected gradient on
// the transport polytope with a Dykstra projection.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "qot/core.hpp"
#include "qot/errors.hpp"

namespace qot::oracle {

/// Root of sum_j w_j (x - y_j)_+ = eps by bisection on
/// [min y, max y + eps / min w].
inline double bisect_weighted_hinge(std::span<const double> y,
                                    std::span<const double> w, double eps) {
  const std::size_t m = y.size();
  double lo = y[0], hi = y[0], wmin = w[0];
  for (std::size_t j = 0; j < m; ++j) {
    lo = std::min(lo, y[j]);
    hi = std::max(hi, y[j]);
    wmin = std::min(wmin, w[j]);
  }
  hi += eps / wmin;
  auto phi = [&](double x) {
    double acc = -eps;
    for (std::size_t j = 0; j < m; ++j)
      if (x > y[j]) acc += w[j] * (x - y[j]);
    return acc;
  };
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi(mid) >= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Euclidean projection onto {pi >= 0, rows sum to a, cols sum to b} by
/// Dykstra's algorithm (the nonnegativity set carries the correction term;
/// the two marginal constraints are affine).
inline RowMatrix project_transport_polytope(const RowMatrix& pi0,
                                            const Vector& a, const Vector& b,
                                            int max_iter = 20000,
                                            double tol = 1e-15) {
  const Index n = pi0.rows(), m = pi0.cols();
  RowMatrix x = pi0;
  RowMatrix inc = RowMatrix::Zero(n, m);
  for (int it = 0; it < max_iter; ++it) {
    // Affine row projection: shift each row by its deficit spread uniformly.
    for (Index i = 0; i < n; ++i)
      x.row(i).array() += (a[i] - x.row(i).sum()) / static_cast<double>(m);
    for (Index j = 0; j < m; ++j)
      x.col(j).array() += (b[j] - x.col(j).sum()) / static_cast<double>(n);
    RowMatrix y = (x + inc).cwiseMax(0.0);
    RowMatrix new_inc = x + inc - y;
    const double delta = (y - x).cwiseAbs().maxCoeff() +
                         (new_inc - inc).cwiseAbs().maxCoeff();
    x = y;
    inc = new_inc;
    if (delta < tol) {
      double viol = 0.0;
      for (Index i = 0; i < n; ++i)
        viol = std::max(viol, std::abs(x.row(i).sum() - a[i]));
      for (Index j = 0; j < m; ++j)
        viol = std::max(viol, std::abs(x.col(j).sum() - b[j]));
      if (viol < 1e-13) break;
    }
  }
  return x;
}

struct QpSolution {
  RowMatrix pi;
  double objective = 0.0;
  double stationarity = 0.0;
};

/// Minimizes sum c_ij pi_ij + (eps/2) sum pi_ij^2/(a_i b_j) over the
/// transport polytope by projected gradient, run to the requested
/// stationarity of the unit-step natural residual ||pi - P(pi - grad)||_inf.
inline QpSolution qp_transport_oracle(const DiscreteProblem& p,
                                      double stat_tol = 1e-12,
                                      int max_iter = 200000) {
  const Index n = p.rows(), m = p.cols();
  RowMatrix pi(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) pi(i, j) = p.a[i] * p.b[j];
  double lips = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      lips = std::max(lips, p.eps / (p.a[i] * p.b[j]));
  const double step = 1.0 / lips;
  auto grad = [&](const RowMatrix& q) {
    RowMatrix g(n, m);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j)
        g(i, j) = p.cost(i, j) + p.eps * q(i, j) / (p.a[i] * p.b[j]);
    return g;
  };
  QpSolution sol;
  for (int it = 0; it < max_iter; ++it) {
    RowMatrix g = grad(pi);
    RowMatrix next = project_transport_polytope(pi - step * g, p.a, p.b);
    RowMatrix natural = project_transport_polytope(pi - g, p.a, p.b);
    sol.stationarity = (pi - natural).cwiseAbs().maxCoeff();
    if (sol.stationarity <= stat_tol && it > 0) break;
    pi = next;
  }
  sol.pi = pi;
  double obj = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      obj += p.cost(i, j) * pi(i, j) +
             0.5 * p.eps * pi(i, j) * pi(i, j) / (p.a[i] * p.b[j]);
  sol.objective = obj;
  return sol;
}

/// Unregularized OT value for uniform square instances by enumerating all
/// assignments; feasible only for tiny n.
inline double assignment_bruteforce(const RowMatrix& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n || n > 9)
    throw InvalidInput("assignment_bruteforce: needs a square matrix, n <= 9");
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double tot = 0.0;
    for (Index i = 0; i < n; ++i) tot += cost(i, perm[i]);
    best = std::min(best, tot);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

/// Central finite differences of the dual objective.
inline Vector fd_dual_gradient(const DiscreteProblem& p,
                               const DualPotentials& pot, double h = 1e-6) {
  const Index n = p.rows(), m = p.cols();
  Vector out(n + m);
  DualPotentials q = pot;
  for (Index i = 0; i < n; ++i) {
    const double orig = q.f[i];
    q.f[i] = orig + h;
    const double up = dual_objective(p, q);
    q.f[i] = orig - h;
    const double dn = dual_objective(p, q);
    q.f[i] = orig;
    out[i] = (up - dn) / (2.0 * h);
  }
  for (Index j = 0; j < m; ++j) {
    const double orig = q.g[j];
    q.g[j] = orig + h;
    const double up = dual_objective(p, q);
    q.g[j] = orig - h;
    const double dn = dual_objective(p, q);
    q.g[j] = orig;
    out[n + j] = (up - dn) / (2.0 * h);
  }
  return out;
}

/// Central finite differences of the residual map F = (r, s) along direction
/// v, for checking Newton-derivative actions at non-kink points.
inline Vector fd_residual_jvp(const DiscreteProblem& p,
                              const DualPotentials& pot, const Vector& v,
                              double h = 1e-6) {
  const Index n = p.rows(), m = p.cols();
  DualPotentials up{pot.f + h * v.head(n), pot.g + h * v.tail(m)};
  DualPotentials dn{pot.f - h * v.head(n), pot.g - h * v.tail(m)};
  const ResidualPair ru = residuals(p, up);
  const ResidualPair rd = residuals(p, dn);
  Vector out(n + m);
  out.head(n) = (ru.r - rd.r) / (2.0 * h);
  out.tail(m) = (ru.s - rd.s) / (2.0 * h);
  return out;
}

}  // namespace qot::oracle
