#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "seqot/error.hpp"
#include "seqot/lp.hpp"

using namespace seqot;

namespace {

// Vertex enumeration oracle for tiny transport problems: the optimum of a
// 2 x n transport LP is attained at some flow where row 0 fills columns in
// some order, so enumerate all column orders greedily.
double two_row_oracle(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c) {
  const std::size_t n = b.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  double best = INFINITY;
  do {
    double left = a[0], v = 0.0;
    for (std::size_t j : order) {
      const double take = std::min(left, b[j]);
      left -= take;
      v += take * c[j] + (b[j] - take) * c[n + j];
    }
    best = std::min(best, v);
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

}  // namespace

TEST_CASE("transport simplex matches the two-row vertex enumeration") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 1.0), cost(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    std::vector<double> b(n), c(2 * n);
    for (auto& x : b) x = u(rng);
    for (auto& x : c) x = cost(rng);
    const double total = std::accumulate(b.begin(), b.end(), 0.0);
    const double split = u(rng) / 1.1;
    const std::vector<double> a{split * total, (1.0 - split) * total};
    const auto s = lp::solve_transport(a, b, c);
    CHECK(s.value == doctest::Approx(two_row_oracle(a, b, c)).epsilon(1e-12));
  }
}

TEST_CASE("transport simplex handles degenerate integer instances") {
  // equal supplies and demands make every basis degenerate
  const std::size_t n = 12;
  std::vector<double> a(n, 1.0), b(n, 1.0), c(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = static_cast<double>((i * 7 + j * 3) % 5);
  const auto s = lp::solve_transport(a, b, c);
  CHECK(s.value == doctest::Approx(0.0));  // a zero-cost perfect matching exists
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) CHECK(s.u[i] + s.v[j] <= c[i * n + j] + 1e-12);
}

TEST_CASE("transport simplex rejects unbalanced mass") {
  const std::vector<double> a{1.0}, b{0.5}, c{1.0};
  CHECK_THROWS_AS(lp::solve_transport(a, b, c), SolverError);
}

TEST_CASE("dense simplex: textbook instance with known optimum") {
  // min -x1 - 2 x2  s.t. x1 + x2 + s1 = 4, x1 + 3 x2 + s2 = 6
  const std::vector<double> A{1, 1, 1, 0, 1, 3, 0, 1};
  const std::vector<double> b{4, 6}, c{-1, -2, 0, 0};
  const auto s = lp::solve_standard_form(A, 2, 4, b, c);
  REQUIRE(s.status == lp::LpStatus::optimal);
  CHECK(s.value == doctest::Approx(-5.0));  // x = (3, 1)
  CHECK(s.x[0] == doctest::Approx(3.0));
  CHECK(s.x[1] == doctest::Approx(1.0));
  // dual objective equals the primal one
  CHECK(s.duals[0] * 4 + s.duals[1] * 6 == doctest::Approx(-5.0));
}

TEST_CASE("dense simplex detects infeasible and unbounded programs") {
  const std::vector<double> A{1, 1};
  const std::vector<double> neg{-1.0};
  CHECK(lp::solve_standard_form(A, 1, 2, neg, std::vector<double>{1, 1}).status == lp::LpStatus::infeasible);
  const std::vector<double> A2{1, -1};
  const std::vector<double> one{1.0};
  CHECK(lp::solve_standard_form(A2, 1, 2, one, std::vector<double>{-1, -1}).status == lp::LpStatus::unbounded);
}

TEST_CASE("dense simplex tolerates redundant equality rows") {
  // the second row duplicates the first
  const std::vector<double> A{1, 1, 1, 1};
  const std::vector<double> b{2, 2}, c{1, 3};
  const auto s = lp::solve_standard_form(A, 2, 2, b, c);
  REQUIRE(s.status == lp::LpStatus::optimal);
  CHECK(s.value == doctest::Approx(2.0));
}
