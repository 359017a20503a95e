#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "seqot/kernels.hpp"

using namespace seqot;
using namespace seqot::kernels;

namespace {

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("cost matrix: serial and parallel agree bitwise and match the definition") {
  std::mt19937_64 rng(1);
  const std::size_t m = 37, n = 53, d = 3;
  const auto x = uniform(rng, m * d, -3, 3), y = uniform(rng, n * d, -3, 3);
  for (CostKind kind : {CostKind::squared_euclidean, CostKind::squared_coordinate}) {
    CostArgs a{x, y, d, kind, 2};
    std::vector<double> s(m * n), p(m * n);
    serial::cost_matrix(a, s);
    omp::cost_matrix(a, p);
    CHECK(s == p);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double expect = 0.0;
        for (std::size_t k = 0; k < d; ++k)
          if (kind == CostKind::squared_euclidean || k == 2) expect += std::pow(x[i * d + k] - y[j * d + k], 2);
        CHECK(s[i * n + j] == doctest::Approx(expect).epsilon(1e-14));
      }
  }
}

TEST_CASE("row log-sum-exp: serial and parallel agree; large offsets stay finite") {
  std::mt19937_64 rng(2);
  const std::size_t m = 20, n = 31;
  const auto c = uniform(rng, m * n, 0, 10);
  auto off = uniform(rng, n, 700, 800);
  std::vector<double> s(m), p(m);
  SoftminArgs a{c.data(), m, n, off.data(), 50.0};
  serial::row_logsumexp(a, s);
  omp::row_logsumexp(a, p);
  CHECK(s == p);
  for (std::size_t i = 0; i < m; ++i) {
    CHECK(std::isfinite(s[i]));
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, off[j] - c[i * n + j] * 50.0);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += std::exp(off[j] - c[i * n + j] * 50.0 - mx);
    CHECK(s[i] == doctest::Approx(mx + std::log(acc)).epsilon(1e-14));
  }
}

TEST_CASE("entropic map: serial and parallel agree; convex combination of targets") {
  std::mt19937_64 rng(3);
  const std::size_t q = 40, t = 25, d = 2;
  const auto xq = uniform(rng, q * d, -1, 1), yt = uniform(rng, t * d, -1, 1), off = uniform(rng, t, -1, 1);
  EntropicMapArgs a{xq, yt, d, off, 20.0};
  std::vector<double> s(q * d), p(q * d);
  serial::entropic_map(a, s);
  omp::entropic_map(a, p);
  CHECK(s == p);
  for (double v : s) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("max_threads is positive") { CHECK(max_threads() >= 1); }
