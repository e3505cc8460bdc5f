#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qot/core.hpp"
#include "qot/errors.hpp"
#include "qot/rng.hpp"

namespace qot {

enum class CovarianceModel { paper, isotropic };

inline std::string to_string(CovarianceModel m) {
  return m == CovarianceModel::paper ? "paper" : "isotropic";
}

inline CovarianceModel covariance_from_string(const std::string& s) {
  if (s == "paper") return CovarianceModel::paper;
  if (s == "isotropic") return CovarianceModel::isotropic;
  throw InvalidInput("unknown covariance model: " + s);
}

/// Ball image under an affine map: {center + shape u : ||u|| <= radius}.
struct Ellipsoid {
  Vector center;
  Eigen::MatrixXd shape;
  double radius = 0.0;
};

/// Truncated-Gaussian pair whose exact quadratic-cost Monge map is
/// x -> A x + a with diagonal positive definite A. All stored parameters are
/// in the unscaled frame; `scale` carries the global rescale that puts both
/// supports inside the unit ball.
struct AffineBenchmark {
  int d = 0;
  double base = 1.0;
  CovarianceModel cov_model = CovarianceModel::paper;
  Vector a_diag;
  Vector a_off;
  Vector m0;
  Eigen::MatrixXd sigma0;
  double r_trunc = 0.0;
  double scale = 1.0;

  double lambda_max() const { return a_diag.maxCoeff(); }
  Vector m1() const { return a_diag.cwiseProduct(m0) + a_off; }
  Eigen::MatrixXd sigma1() const {
    return a_diag.asDiagonal() * sigma0 * a_diag.asDiagonal();
  }
  Ellipsoid omega0() const {
    return {m0, Eigen::MatrixXd::Identity(d, d), r_trunc};
  }
  Ellipsoid omega1() const {
    return {m1(), Eigen::MatrixXd(a_diag.asDiagonal()), r_trunc};
  }
};

/// Monge map in the rescaled frame: A x + scale * a.
inline Vector monge_map(const AffineBenchmark& bench, const Vector& x) {
  if (x.size() != bench.d) throw InvalidInput("monge_map: dimension mismatch");
  return bench.a_diag.cwiseProduct(x) + bench.scale * bench.a_off;
}

/// Benchmark family: A = diag(base, base^2, ..., base^d), truncation radius
/// 0.8/sqrt(d), and either the weakly correlated covariance
/// Sigma_ii = (1/d - 45/d^2) r^2, Sigma_ij = (45/d^2) r^2 (valid only for
/// large d) or the isotropic fallback (r^2/d) I. Positive definiteness is
/// checked numerically and invalid parameter combinations are rejected.
inline AffineBenchmark make_affine_family(
    int d, double base, CovarianceModel model = CovarianceModel::paper) {
  if (d < 1) throw InvalidInput("make_affine_family: d must be >= 1");
  if (!(base > 0.0) || !std::isfinite(base))
    throw InvalidInput("make_affine_family: base must be finite and > 0");
  AffineBenchmark bench;
  bench.d = d;
  bench.base = base;
  bench.cov_model = model;
  bench.a_diag.resize(d);
  double power = 1.0;
  for (int k = 0; k < d; ++k) {
    power *= base;
    bench.a_diag[k] = power;
  }
  bench.a_off = Vector::Zero(d);
  bench.m0 = Vector::Zero(d);
  bench.r_trunc = 0.8 / std::sqrt(static_cast<double>(d));
  const double r2 = bench.r_trunc * bench.r_trunc;
  if (model == CovarianceModel::paper) {
    const double dd = static_cast<double>(d);
    const double diag = (1.0 / dd - 45.0 / (dd * dd)) * r2;
    const double off = 45.0 / (dd * dd) * r2;
    bench.sigma0 =
        Eigen::MatrixXd::Constant(d, d, off) +
        (diag - off) * Eigen::MatrixXd::Identity(d, d);
  } else {
    bench.sigma0 = (r2 / static_cast<double>(d)) *
                   Eigen::MatrixXd::Identity(d, d);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(bench.sigma0);
  if (llt.info() != Eigen::Success)
    throw InvalidInput(
        "make_affine_family: covariance failed the positive-definiteness "
        "check (the weakly correlated model needs d > 90; use the isotropic "
        "model for small d)");
  bench.scale = 1.0 / (std::max(bench.lambda_max(), 1.0) * bench.r_trunc);
  return bench;
}

/// i.i.d. draws from N(m, Sigma) conditioned on the ball B(center, radius)
/// by rejection sampling through the Cholesky factor. Each accepted point
/// has a hard attempt budget; exhausting it raises a sampling failure that
/// reports the empirical acceptance rate.
inline RowMatrix sample_truncated_gaussian(const Vector& m,
                                           const Eigen::MatrixXd& sigma,
                                           const Vector& center, double radius,
                                           Index n, SplitMix64& rng,
                                           long max_attempts_per_point = 10000) {
  const Index d = m.size();
  if (sigma.rows() != d || sigma.cols() != d || center.size() != d)
    throw InvalidInput("sample_truncated_gaussian: dimension mismatch");
  if (!(radius > 0.0))
    throw InvalidInput("sample_truncated_gaussian: radius must be > 0");
  if (n < 1) throw InvalidInput("sample_truncated_gaussian: n must be >= 1");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw InvalidInput("sample_truncated_gaussian: covariance not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();

  RowMatrix out(n, d);
  Vector z(d), x(d);
  const double radius2 = radius * radius;
  long total_attempts = 0;
  for (Index row = 0; row < n; ++row) {
    bool accepted = false;
    for (long attempt = 0; attempt < max_attempts_per_point; ++attempt) {
      ++total_attempts;
      for (Index k = 0; k + 1 < d; k += 2) normal_pair(rng, z[k], z[k + 1]);
      if (d % 2 == 1) {
        double z0, z1;
        normal_pair(rng, z0, z1);
        z[d - 1] = z0;
      }
      x = m + L * z;
      if ((x - center).squaredNorm() <= radius2) {
        out.row(row) = x;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      const double rate =
          static_cast<double>(row) / static_cast<double>(total_attempts);
      throw SamplingFailure(
          "sample_truncated_gaussian: attempt budget exhausted (empirical "
          "acceptance rate " +
          std::to_string(rate) + ")");
    }
  }
  return out;
}

/// Empirical pair (X, Y) with uniform weights; the first paired_count targets
/// reuse source draws through the Monge map, the rest push forward fresh
/// independent draws.
struct EmpiricalInstance {
  RowMatrix X;
  RowMatrix Y;
  Vector a;
  Vector b;
  AffineBenchmark benchmark;
  Index paired_count = 0;
  std::uint64_t seed = 0;
  double p_pair = 0.0;

  Index n() const { return X.rows(); }
  Index m() const { return Y.rows(); }
  bool fully_paired() const {
    return paired_count == m() && m() == n();
  }
};

inline EmpiricalInstance generate_instance(const AffineBenchmark& bench,
                                           Index N, Index M, double p_pair,
                                           std::uint64_t seed) {
  if (N < 1 || M < 1)
    throw InvalidInput("generate_instance: N and M must be >= 1");
  if (!(p_pair >= 0.0 && p_pair <= 1.0))
    throw InvalidInput("generate_instance: p_pair must be in [0, 1]");
  const Index paired = static_cast<Index>(std::floor(p_pair * static_cast<double>(M)));
  if (paired > N)
    throw InvalidInput("generate_instance: p_pair * M exceeds N, paired targets reuse source draws");

  EmpiricalInstance inst;
  inst.benchmark = bench;
  inst.paired_count = paired;
  inst.seed = seed;
  inst.p_pair = p_pair;

  SplitMix64 rng_src =
      make_stream(seed, static_cast<std::uint64_t>(bench.d), StreamRole::source);
  inst.X = bench.scale * sample_truncated_gaussian(bench.m0, bench.sigma0,
                                                   bench.m0, bench.r_trunc, N,
                                                   rng_src);
  inst.Y.resize(M, bench.d);
  for (Index j = 0; j < paired; ++j)
    inst.Y.row(j) = monge_map(bench, inst.X.row(j).transpose());
  if (M > paired) {
    SplitMix64 rng_fresh = make_stream(
        seed, static_cast<std::uint64_t>(bench.d), StreamRole::fresh_target);
    const RowMatrix fresh =
        bench.scale * sample_truncated_gaussian(bench.m0, bench.sigma0,
                                                bench.m0, bench.r_trunc,
                                                M - paired, rng_fresh);
    for (Index j = paired; j < M; ++j)
      inst.Y.row(j) = monge_map(bench, fresh.row(j - paired).transpose());
  }
  inst.a = Vector::Constant(N, 1.0 / static_cast<double>(N));
  inst.b = Vector::Constant(M, 1.0 / static_cast<double>(M));
  return inst;
}

/// Verifies the affine pushforward relations m1 = A m0 + a, Sigma1 = A
/// Sigma0 A and that Omega1 is the parametric image of Omega0 under the map.
inline bool compatibility_check(const Vector& m0, const Eigen::MatrixXd& sigma0,
                                const Ellipsoid& omega0, const Vector& m1,
                                const Eigen::MatrixXd& sigma1,
                                const Ellipsoid& omega1,
                                const Eigen::MatrixXd& A, const Vector& a_off) {
  constexpr double tol = 1e-10;
  if ((m1 - (A * m0 + a_off)).norm() > tol) return false;
  if ((sigma1 - A * sigma0 * A).cwiseAbs().maxCoeff() > tol) return false;
  if ((omega1.center - (A * omega0.center + a_off)).norm() > tol) return false;
  if ((omega1.shape - A * omega0.shape).cwiseAbs().maxCoeff() > tol)
    return false;
  if (std::abs(omega1.radius - omega0.radius) > tol) return false;
  return true;
}

/// Median of all entries; even counts average the two middle order
/// statistics (selection based, no full sort).
inline double median_cost(const RowMatrix& C) {
  if (C.size() == 0) throw InvalidInput("median_cost: empty matrix");
  std::vector<double> v(C.data(), C.data() + C.size());
  const std::size_t sz = v.size();
  const std::size_t upper = sz / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(upper),
                   v.end());
  const double hi = v[upper];
  if (sz % 2 == 1) return hi;
  const double lo =
      *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(upper));
  return 0.5 * (lo + hi);
}

}  // namespace qot
