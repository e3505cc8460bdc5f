#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "qot/errors.hpp"

namespace qot {

/// Scratch buffers so a Gauss-Seidel sweep performs no per-row allocation.
struct HingeScratch {
  std::vector<std::pair<double, double>> sorted;  // (value, weight)

  void reserve(std::size_t m) { sorted.reserve(m); }
};

/// Solves sum_j w_j (x - y_j)_+ = eps for the unique root x.
///
/// The left-hand side is piecewise linear and increasing past min(y); after
/// stably sorting the knots, the candidate on [y_(k), y_(k+1)] is
/// x = (eps + S_k) / B_k with B_k, S_k the weight and weighted-value prefix
/// sums, and the first candidate landing in its (closed) interval is the
/// root. Interval checks use exact comparisons; a candidate on a knot is
/// accepted at the first qualifying k.
inline double solve_weighted_hinge(std::span<const double> y,
                                   std::span<const double> w, double eps,
                                   HingeScratch& scratch) {
  const std::size_t m = y.size();
  if (m == 0) throw InvalidInput("solve_weighted_hinge: empty input");
  if (w.size() != m)
    throw InvalidInput("solve_weighted_hinge: weight length mismatch");
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw InvalidInput("solve_weighted_hinge: eps must be finite and > 0");

  auto& s = scratch.sorted;
  s.clear();
  s.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (!(w[j] > 0.0) || !std::isfinite(w[j]))
      throw InvalidInput("solve_weighted_hinge: weights must be finite and > 0");
    if (!std::isfinite(y[j]))
      throw InvalidInput("solve_weighted_hinge: values must be finite");
    s.emplace_back(y[j], w[j]);
  }
  std::stable_sort(s.begin(), s.end(),
                   [](const auto& lhs, const auto& rhs) {
                     return lhs.first < rhs.first;
                   });

  double B = 0.0, S = 0.0, x = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    B += s[k].second;
    S += s[k].second * s[k].first;
    x = (eps + S) / B;
    const double upper =
        (k + 1 < m) ? s[k + 1].first : std::numeric_limits<double>::infinity();
    if (s[k].first <= x && x <= upper) return x;
  }
  // Rounding pushed every candidate off its interval (root within one ulp of
  // a knot); the all-active candidate is the closest representable answer.
  return x;
}

inline double solve_weighted_hinge(std::span<const double> y,
                                   std::span<const double> w, double eps) {
  HingeScratch scratch;
  return solve_weighted_hinge(y, w, eps, scratch);
}

}  // namespace qot
