#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "seqot/measures.hpp"
#include "test_util.hpp"

using namespace seqot;

TEST_CASE("empirical_from_samples keeps duplicates as separate atoms") {
  const auto m = empirical_from_samples({{0.0}, {0.0}, {1.0}});
  REQUIRE(m.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(m.weight(k) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(m.point(0)[0] == 0.0);
  CHECK(m.point(1)[0] == 0.0);
  CHECK(m.merged().size() == 2);
  CHECK(m.merged().weight(0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empirical_from_samples: single point is a Dirac") {
  const auto m = empirical_from_samples({{1.0, 2.0}});
  REQUIRE(m.size() == 1);
  CHECK(m.dim() == 2);
  CHECK(m.weight(0) == 1.0);
  CHECK(m.point(0)[1] == 2.0);
}

TEST_CASE("empirical_from_samples: Gaussian sample mean") {
  std::mt19937_64 rng(11);
  const auto m = empirical_from_samples(testing::normal_samples(rng, 10000, 1));
  CHECK(std::abs(mean(m)[0]) < 0.05);
}

TEST_CASE("empirical_from_samples rejects bad input") {
  CHECK_THROWS_AS(empirical_from_samples({}), std::invalid_argument);
  CHECK_THROWS_AS(empirical_from_samples({{1.0}, {1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("DiscreteMeasure validates and prunes") {
  CHECK_THROWS_AS(DiscreteMeasure(1, {0.0, 1.0}, {0.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure(2, {0.0, 1.0, 2.0}, {0.5, 0.5}), std::invalid_argument);
  const DiscreteMeasure m(1, {0.0, 1.0, 2.0}, {1.0, 1e-18, 1.0});
  CHECK(m.size() == 2);
  double s = 0.0;
  for (double w : m.weights()) s += w;
  CHECK(std::abs(s - 1.0) <= 1e-12);
}

TEST_CASE("moment") {
  CHECK(moment(DiscreteMeasure::dirac({3.0}), 0, 2) == 9.0);
  CHECK(moment(DiscreteMeasure(1, {0.0, 2.0}, {0.5, 0.5}), 0, 1) == 1.0);
  CHECK_THROWS_AS(moment(DiscreteMeasure::dirac({3.0}), 1, 2), std::out_of_range);

  std::mt19937_64 rng(7);
  const auto m = empirical_from_samples(testing::normal_samples(rng, 100000, 1));
  CHECK(moment(m, 0, 2) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("moment is linear under mixing") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = testing::random_measure(rng, 7, 2);
    const auto b = testing::random_measure(rng, 5, 2);
    const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto mix = a.mix(b, alpha);
    for (int order = 1; order <= 3; ++order)
      CHECK(std::abs(moment(mix, 1, order) - (alpha * moment(a, 1, order) + (1 - alpha) * moment(b, 1, order))) <=
            1e-12);
  }
}

TEST_CASE("constructor outputs satisfy the type invariants") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = testing::random_measure(rng, 1 + trial % 13, 1 + trial % 4);
    double s = 0.0;
    for (double w : m.weights()) {
      CHECK(w >= 0.0);
      s += w;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
    CHECK(m.coords().size() == m.size() * m.dim());
  }
}

TEST_CASE("gaussian_w2 closed forms") {
  CHECK(gaussian_w2(GaussianSpec::isotropic({0.0}, 1.0), GaussianSpec::isotropic({1.0}, 1.0)) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gaussian_w2(GaussianSpec::isotropic({0.0}, 1.0), GaussianSpec::isotropic({0.0}, 4.0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gaussian_w2(GaussianSpec::isotropic({0.0, 0.0}, 1.0), GaussianSpec::isotropic({3.0, 4.0}, 1.0)) ==
        doctest::Approx(25.0).epsilon(1e-14));
  // diagonal: |dm|^2 + sum (sigma_a - sigma_b)^2
  const auto a = GaussianSpec::diagonal({1.0, 0.0, -1.0}, {1.0, 4.0, 9.0});
  const auto b = GaussianSpec::diagonal({0.0, 0.0, 0.0}, {4.0, 1.0, 1.0});
  CHECK(gaussian_w2(a, b) == doctest::Approx(2.0 + 1.0 + 1.0 + 4.0).epsilon(1e-12));
  CHECK_THROWS_AS(gaussian_w2(a, GaussianSpec::isotropic({0.0}, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(GaussianSpec({0.0, 0.0}, {1.0, 2.0, 2.0, 1.0}), std::invalid_argument);
}

namespace {

GaussianSpec random_gaussian(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> z;
  std::vector<double> a(d * d), cov(d * d, 0.0), m(d);
  for (double& x : a) x = z(rng);
  for (double& x : m) x = z(rng);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < d; ++k) cov[i * d + j] += a[i * d + k] * a[j * d + k];
      if (i == j) cov[i * d + j] += 0.1;
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) cov[i * d + j] = cov[j * d + i];
  return GaussianSpec(std::move(m), std::move(cov));
}

}  // namespace

TEST_CASE("gaussian_w2 is a squared metric") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + trial % 4;
    const auto a = random_gaussian(rng, d), b = random_gaussian(rng, d), c = random_gaussian(rng, d);
    CHECK(gaussian_w2(a, a) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(gaussian_w2(a, b) == doctest::Approx(gaussian_w2(b, a)).epsilon(1e-9));
    CHECK(std::sqrt(gaussian_w2(a, c)) <= std::sqrt(gaussian_w2(a, b)) + std::sqrt(gaussian_w2(b, c)) + 1e-9);
  }
}

TEST_CASE("quantile_from_grid: uniform density gives the identity quantile") {
  const Grid1D g({0.0, 1.0}, {1.0, 1.0});
  const auto q = quantile_from_grid(g, 4);
  REQUIRE(q.size() == 4);
  CHECK(q.values[0] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(q.values[1] == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(q.values[2] == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(q.values[3] == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(q.grid[0] == 0.125);
}

TEST_CASE("quantile_from_grid: Gaussian median") {
  const auto g = Grid1D::tabulate([](double x) { return std::exp(-0.5 * x * x); }, -8.0, 8.0, 16001);
  const auto q = quantile_from_grid(g, 10000);
  // the median sits between the two central cells
  CHECK(std::abs(0.5 * (q.values[4999] + q.values[5000])) < 1e-4);
  // oracle: Simpson integral of the density up to the 0.3 quantile value
  const double x = q.values[2999];
  const double mass = testing::simpson([](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * M_PI); }, -8.0, x);
  CHECK(std::abs(mass - 0.29995) < 1e-6);
}

TEST_CASE("quantile_from_grid: spiky density stays nondecreasing") {
  std::vector<double> x, f;
  for (int i = 0; i <= 400; ++i) {
    x.push_back(-2.0 + 0.01 * i);
    const double t = x.back();
    f.push_back(std::exp(-std::pow((t + 1.0) / 0.01, 2)) + std::exp(-std::pow((t - 1.0) / 0.01, 2)));
  }
  const auto g = Grid1D::normalized(x, f);
  for (auto sampling : {QuantileSampling::midpoint, QuantileSampling::cell_mean}) {
    const auto q = quantile_from_grid(g, 1000, sampling);
    for (std::size_t k = 1; k < q.size(); ++k) CHECK(q.values[k - 1] <= q.values[k]);
  }
  CHECK_THROWS_AS(quantile_from_grid(g, 1), std::invalid_argument);
}

TEST_CASE("Grid1D enforces normalization") {
  CHECK_THROWS_AS(Grid1D({0.0, 1.0}, {2.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(Grid1D::normalized({0.0, 1.0}, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Grid1D::normalized({1.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("quantile of discrete measures: exact cells with stable ties") {
  const DiscreteMeasure m(1, {1.0, 0.0, 1.0}, {0.25, 0.5, 0.25});
  const auto q = quantile_from_discrete(m);
  REQUIRE(q.size() == 3);
  CHECK(q.values == std::vector<double>{0.0, 1.0, 1.0});
  CHECK(q.masses[0] == 0.5);
  CHECK(q.grid[1] == doctest::Approx(0.625));
}

TEST_CASE("Gaussian quantiles: cell means and midpoints") {
  const auto cm = quantile_from_gaussian({1.0, 2.0}, 10000, QuantileSampling::cell_mean);
  const auto mp = quantile_from_gaussian({1.0, 2.0}, 10000, QuantileSampling::midpoint);
  double mean_cm = 0.0;
  for (double v : cm.values) mean_cm += v / 10000.0;
  CHECK(mean_cm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mp.values[5000] == doctest::Approx(1.0 + 2.0 * normal_quantile(0.50005)).epsilon(1e-14));
  CHECK(normal_quantile(normal_cdf(1.3)) == doctest::Approx(1.3).epsilon(1e-13));
}
