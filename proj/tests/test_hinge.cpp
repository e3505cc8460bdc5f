#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qot/hinge.hpp"
#include "qot/oracles.hpp"
#include "qot/rng.hpp"

using namespace qot;

namespace {
double uni(SplitMix64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}
}  // namespace

TEST_CASE("hinge: single knot from zero") {
  std::vector<double> y{0.0}, w{1.0};
  CHECK(solve_weighted_hinge(y, w, 2.0) == 2.0);
}

TEST_CASE("hinge: two equal weights") {
  std::vector<double> y{0.0, 1.0}, w{0.5, 0.5};
  CHECK(solve_weighted_hinge(y, w, 0.25) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("hinge: root lands on a knot") {
  std::vector<double> y{1.0, 2.0, 3.0};
  std::vector<double> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const double x = solve_weighted_hinge(y, w, 1.0);
  CHECK(x == Catch::Approx(3.0).margin(1e-14));
  CHECK(x == Catch::Approx(oracle::bisect_weighted_hinge(y, w, 1.0)).margin(1e-10));
}

TEST_CASE("hinge: invalid inputs") {
  std::vector<double> y{0.0}, w{1.0};
  CHECK_THROWS_AS(solve_weighted_hinge(std::vector<double>{}, std::vector<double>{}, 1.0),
                  InvalidInput);
  CHECK_THROWS_AS(solve_weighted_hinge(y, std::vector<double>{0.0}, 1.0),
                  InvalidInput);
  CHECK_THROWS_AS(solve_weighted_hinge(y, std::vector<double>{-1.0}, 1.0),
                  InvalidInput);
  CHECK_THROWS_AS(solve_weighted_hinge(y, w, 0.0), InvalidInput);
  CHECK_THROWS_AS(solve_weighted_hinge(y, w, -1.0), InvalidInput);
  CHECK_THROWS_AS(
      solve_weighted_hinge(std::vector<double>{std::nan("")}, w, 1.0),
      InvalidInput);
}

TEST_CASE("hinge: exactness and oracle agreement on random instances") {
  SplitMix64 rng(make_stream(7, 0, StreamRole::source));
  HingeScratch scratch;
  for (int t = 0; t < 2000; ++t) {
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
    REQUIRE(std::abs(resid) <= 1e-12 * (eps + wy));
    REQUIRE(std::abs(x - oracle::bisect_weighted_hinge(y, w, eps)) <= 1e-10);
  }
}

TEST_CASE("hinge: monotone in eps, shift equivariant, above min knot") {
  SplitMix64 rng(make_stream(8, 0, StreamRole::source));
  for (int t = 0; t < 500; ++t) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng() % 30);
    std::vector<double> y(m), w(m);
    for (std::size_t j = 0; j < m; ++j) {
      y[j] = uni(rng, -5.0, 5.0);
      w[j] = uni(rng, 0.1, 5.0);
    }
    const double e1 = uni(rng, 1e-4, 1.0);
    const double e2 = e1 * uni(rng, 1.5, 4.0);
    const double x1 = solve_weighted_hinge(y, w, e1);
    const double x2 = solve_weighted_hinge(y, w, e2);
    REQUIRE(x1 < x2);
    REQUIRE(x1 > *std::min_element(y.begin(), y.end()));

    const double c = uni(rng, -3.0, 3.0);
    std::vector<double> ys(m);
    for (std::size_t j = 0; j < m; ++j) ys[j] = y[j] + c;
    REQUIRE(std::abs(solve_weighted_hinge(ys, w, e1) - (x1 + c)) <= 1e-12);
  }
}

TEST_CASE("hinge: scratch and allocating overloads agree") {
  SplitMix64 rng(make_stream(9, 0, StreamRole::source));
  HingeScratch scratch;
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng() % 50);
    std::vector<double> y(m), w(m);
    for (std::size_t j = 0; j < m; ++j) {
      y[j] = uni(rng, -5.0, 5.0);
      w[j] = uni(rng, 0.1, 5.0);
    }
    const double eps = uni(rng, 1e-3, 2.0);
    REQUIRE(solve_weighted_hinge(y, w, eps, scratch) ==
            solve_weighted_hinge(y, w, eps));
  }
}
