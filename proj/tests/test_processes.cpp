#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "seqot/error.hpp"
#include "seqot/processes.hpp"

using namespace seqot;

namespace {

ProductSpec gaussian_product(std::size_t n, double mean = 0.0, double sd = 1.0) {
  ProductSpec p;
  for (std::size_t i = 0; i < n; ++i) p.factors.push_back(Gaussian1D{mean, sd});
  return p;
}

MixtureSpec gaussian_mixture(std::vector<double> weights, const std::vector<double>& means) {
  MixtureSpec m;
  m.weights = std::move(weights);
  for (double x : means) m.components.push_back(Gaussian1D{x, 1.0});
  return m;
}

/// Minimum over bijections of the average W2^2 between equal-weight Gaussian
/// components with unit variance.
double brute_force_uniform(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[perm[i]]) * (a[i] - b[perm[i]]);
    best = std::min(best, s / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("diagonal transport between Gaussian products") {
  ProductSpec p = gaussian_product(2);
  ProductSpec q;
  q.factors = {Gaussian1D{1.0, 1.0}, Gaussian1D{2.0, 1.0}};
  const DiagonalTransport d = diagonal_transport(p, q);
  CHECK(d.w2sq[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(d.w2sq[1] == doctest::Approx(4.0).epsilon(1e-4));
  CHECK(d.total == doctest::Approx(5.0).epsilon(1e-4));
  CHECK(d.partial_sums[0] == d.w2sq[0]);
  CHECK(d.maps[1](0.3) == doctest::Approx(2.3).epsilon(1e-3));

  // standard to N(0, 4): cost (2 - 1)^2 per coordinate
  const DiagonalTransport s = diagonal_transport(gaussian_product(3), gaussian_product(3, 0.0, 2.0));
  for (double c : s.w2sq) CHECK(c == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(s.maps[0](0.5) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(diagonal_transport(gaussian_product(2), gaussian_product(3)), std::invalid_argument);
}

TEST_CASE("cylinder tilt evaluation") {
  const CylinderTilt t{{0.5, -1.0}, 0.5, 2.0};
  const std::vector<double> x{1.0, 0.5, 7.0};
  CHECK(t(x) == doctest::Approx(std::exp(0.0) * (1.0 + 0.5 * std::tanh(1.0))));
  CHECK(CylinderTilt{}.constant());
  CHECK(CylinderTilt{}(std::vector<double>{3.0}) == 1.0);
  CHECK_FALSE(t.constant());
  CHECK_THROWS_AS(t(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("quasi-product: untilted laws have no discrepancy") {
  QuasiProductSpec spec{gaussian_product(3), gaussian_product(3, 1.0, 0.5), {}, {}};
  const QuasiProductReport r = quasi_product_approx(spec);
  REQUIRE(r.pairs.size() == 3);
  for (const auto& p : r.pairs) {
    CHECK(p.D == 0.0);
    CHECK(p.entropy == 0.0);
    CHECK(p.asserted);
    CHECK(p.pass);
  }
  CHECK(r.K == doctest::Approx(4.0));
  CHECK(r.contraction == doctest::Approx(2.0));
}

TEST_CASE("quasi-product: a one-coordinate tilt is matched exactly by every level") {
  QuasiProductSpec spec{gaussian_product(3), gaussian_product(3), CylinderTilt{{0.7}, 0.3, 1.0}, {}};
  const QuasiProductReport r = quasi_product_approx(spec);
  CHECK(r.resolution == 1000);
  for (const auto& p : r.pairs) {
    CHECK(p.D == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(p.entropy == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(p.pass);
  }
  for (const auto& l : r.levels) CHECK(l.f_entropy > 0.0);
  CHECK(r.jensen_monotone);
}

TEST_CASE("quasi-product: two-coordinate tilts respect the entropy bound") {
  for (double amp : {0.3, 0.6, 0.9}) {
    QuasiProductSpec spec{gaussian_product(3), gaussian_product(3, 0.0, 0.8), CylinderTilt{{0.4, -0.2}, amp, 1.5},
                          CylinderTilt{{0.3}, 0.0, 1.0}};
    QuasiProductOptions opt;
    opt.max_core_nodes = 900;
    const QuasiProductReport r = quasi_product_approx(spec, opt);
    CHECK(r.resolution == 30);
    CHECK(r.jensen_monotone);
    for (const auto& p : r.pairs) {
      CHECK(p.asserted);
      CHECK(p.entropy >= -1e-12);
      CHECK(p.D <= p.bound * (1 + 1e-6) + 1e-14);
      CHECK(p.pass);
      if (p.m >= 2) CHECK(p.D == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
    CHECK(r.pairs[0].D > 0.0);
  }
}

TEST_CASE("quasi-product: pairs with m below the arity of g are reported but not asserted") {
  QuasiProductSpec spec{gaussian_product(2), gaussian_product(2), CylinderTilt{{0.2, 0.1}, 0.4, 1.0},
                        CylinderTilt{{0.1, 0.1}, 0.2, 0.5}};
  QuasiProductOptions opt;
  opt.n_list = {1, 2};
  opt.max_core_nodes = 400;
  const QuasiProductReport r = quasi_product_approx(spec, opt);
  REQUIRE(r.pairs.size() == 1);
  CHECK_FALSE(r.pairs[0].asserted);
  CHECK(std::isnan(r.pairs[0].bound));
}

TEST_CASE("quasi-product hypothesis and argument errors") {
  QuasiProductSpec bad_q{gaussian_product(2), gaussian_product(2), {}, {}};
  bad_q.q.factors[1] = DiscreteMeasure::dirac({0.0});
  CHECK_THROWS_AS(quasi_product_approx(bad_q), std::invalid_argument);  // n_list needs three factors
  QuasiProductOptions two;
  two.n_list = {1, 2};
  CHECK_THROWS_AS(quasi_product_approx(bad_q, two), HypothesisError);

  QuasiProductSpec amp{gaussian_product(3), gaussian_product(3), CylinderTilt{{0.0}, 1.0, 1.0}, {}};
  CHECK_THROWS_AS(quasi_product_approx(amp), std::invalid_argument);
  QuasiProductOptions zero;
  zero.n_list = {0, 1};
  CHECK_THROWS_AS(quasi_product_approx(QuasiProductSpec{gaussian_product(3), gaussian_product(3), {}, {}}, zero),
                  std::invalid_argument);
  // a bimodal target factor is not log-concave
  QuasiProductSpec bimodal{gaussian_product(1), gaussian_product(1), {}, {}};
  bimodal.q.factors[0] = Grid1D::tabulate(
      [](double x) { return normal_pdf(x - 3) + normal_pdf(x + 3); }, -10, 10, 4001);
  QuasiProductOptions one;
  one.n_list = {1};
  CHECK_THROWS_AS(quasi_product_approx(bimodal, one), HypothesisError);
}

TEST_CASE("de Finetti OT picks the monotone assignment") {
  const MixtureSpec mu = gaussian_mixture({0.5, 0.5}, {0.0, 4.0});
  const MixtureSpec nu = gaussian_mixture({0.5, 0.5}, {1.0, 5.0});
  const DeFinettiResult r = definetti_ot(mu, nu);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.is_map);
  CHECK(r.assignment == std::vector<std::size_t>{0, 1});
  CHECK(r.ground_cost[1] == doctest::Approx(25.0).epsilon(1e-4));
  CHECK(r.ground_cost[2] == doctest::Approx(9.0).epsilon(1e-4));
  // the crossed assignment costs (25 + 9) / 2
  CHECK(0.5 * (r.ground_cost[1] + r.ground_cost[2]) == doctest::Approx(17.0).epsilon(1e-4));
  CHECK(r.component_maps[1](4.5) == doctest::Approx(5.5).epsilon(1e-3));
}

TEST_CASE("de Finetti OT against brute force and under relabeling") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(-3.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a(4), b(4);
    for (auto& x : a) x = pos(rng);
    for (auto& x : b) x = pos(rng);
    const std::vector<double> w(4, 0.25);
    const DeFinettiResult r = definetti_ot(gaussian_mixture(w, a), gaussian_mixture(w, b));
    CHECK(r.value == doctest::Approx(brute_force_uniform(a, b)).epsilon(1e-4));
    std::vector<double> b_rev(b.rbegin(), b.rend());
    CHECK(definetti_ot(gaussian_mixture(w, a), gaussian_mixture(w, b_rev)).value == doctest::Approx(r.value).epsilon(1e-10));
  }
}

TEST_CASE("de Finetti OT: one-atom mixtures reduce to one-dimensional W2") {
  MixtureSpec mu, nu;
  mu.weights = {1.0};
  nu.weights = {1.0};
  mu.components = {Gaussian1D{0.0, 1.0}};
  nu.components = {Gaussian1D{0.0, 2.0}};
  const DeFinettiResult r = definetti_ot(mu, nu);
  CHECK(r.value == cached_w2sq(mu.components[0], nu.components[0]));
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.is_map);
}

TEST_CASE("de Finetti OT: unequal weights force a split") {
  const DeFinettiResult r = definetti_ot(gaussian_mixture({1.0 / 3, 2.0 / 3}, {0.0, 2.0}), gaussian_mixture({0.5, 0.5}, {0.0, 2.0}));
  CHECK_FALSE(r.is_map);
  CHECK(r.concentration < 1.0);
  CHECK(r.assignment.empty());
}

TEST_CASE("W2 cache keys and reuse") {
  clear_w2_cache();
  CHECK(w2_cache_size() == 0);
  const Marginal1D a = Gaussian1D{0.0, 1.0}, b = Gaussian1D{1.0, 1.0};
  const double v = cached_w2sq(a, b, 2000);
  CHECK(cached_w2sq(a, b, 2000) == v);
  CHECK(w2_cache_size() == 1);
  cached_w2sq(a, b, 1000);
  CHECK(w2_cache_size() == 2);
  CHECK(marginal_key(a) != marginal_key(b));
  CHECK(marginal_key(gaussian_grid({0.0, 1.0})) == marginal_key(gaussian_grid({0.0, 1.0})));
  CHECK(marginal_key(DiscreteMeasure::dirac({0.0})) != marginal_key(DiscreteMeasure::dirac({1.0})));
}

TEST_CASE("mixture validation") {
  CHECK_THROWS_AS(gaussian_mixture({0.5, 0.4}, {0, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_mixture({1.0, 0.0}, {0, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_mixture({1.0}, {0, 1}).validate(), std::invalid_argument);
  CHECK_NOTHROW(gaussian_mixture({0.25, 0.75}, {0, 1}).validate());
}

TEST_CASE("component classification") {
  const MixtureSpec mix = gaussian_mixture({0.5, 0.5}, {0.0, 3.0});
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> path(1000);
  for (auto& x : path) x = z(rng);
  const Classification c = classify_component(path, mix, {"x"});
  CHECK(c.component == 0);
  CHECK(c.margin == doctest::Approx(3.0).epsilon(0.05));

  const std::vector<double> zeros(10, 0.0);
  const Classification d = classify_component(zeros, gaussian_mixture({0.5, 0.5}, {0.0, 1.0}), {"x"});
  CHECK(d.margin == doctest::Approx(1.0));
  CHECK_FALSE(d.ambiguous);

  const Classification e = classify_component(zeros, gaussian_mixture({1.0}, {5.0}), {"x", "x2"});
  CHECK(e.component == 0);
  CHECK(std::isinf(e.margin));

  // equidistant components are ambiguous
  CHECK(classify_component(zeros, gaussian_mixture({0.5, 0.5}, {-1.0, 1.0}), {"x"}).ambiguous);
  CHECK_THROWS_AS(classify_component(zeros, mix, {"nope"}), std::invalid_argument);
  CHECK_THROWS_AS(classify_component(std::vector<double>{}, mix, {"x"}), std::invalid_argument);
}

TEST_CASE("component classification success rate on second components") {
  const MixtureSpec mix = gaussian_mixture({0.5, 0.5}, {0.0, 3.0});
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z(3.0, 1.0);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> path(200);
    for (auto& x : path) x = z(rng);
    hits += classify_component(path, mix, {"x", "tanh", "x2"}).component == 1;
  }
  CHECK(hits >= 99);
}

TEST_CASE("component moments") {
  CHECK(component_moment(Gaussian1D{1.0, 2.0}, "x2") == 5.0);
  CHECK(component_moment(Gaussian1D{0.0, 1.0}, "abs") == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-6));
  // E cos X = e^{-1/2} for the standard normal
  CHECK(component_moment(Gaussian1D{0.0, 1.0}, "cos") == doctest::Approx(std::exp(-0.5)).epsilon(1e-8));
  CHECK(component_moment(DiscreteMeasure(1, {1.0, 3.0}, {1.0, 1.0}), "x3") == doctest::Approx(14.0));
  CHECK(component_moment(gaussian_grid({0.0, 1.0}), "x2") == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mixture entropy: one component has zero mutual information") {
  const MixtureEntropyReport r = mixture_entropy_bound_check(gaussian_mixture({1.0}, {0.0}), 2, 4, 5000, 3);
  CHECK(r.estimate.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(r.bound == 0.0);
  CHECK(r.pass);
}

TEST_CASE("mixture entropy: two Gaussian components stay below log 2") {
  const MixtureEntropyReport r = mixture_entropy_bound_check(gaussian_mixture({0.5, 0.5}, {0.0, 3.0}), 2, 4, 40000, 5);
  CHECK(r.bound == doctest::Approx(std::log(2.0)));
  CHECK(r.estimate.value > 0.0);
  CHECK(r.estimate.value <= r.bound + 3.0 * r.estimate.standard_error);
  CHECK(r.pass);
  CHECK(r.skipped == 0);
  // deterministic in the seed
  const MixtureEntropyReport again = mixture_entropy_bound_check(gaussian_mixture({0.5, 0.5}, {0.0, 3.0}), 2, 4, 40000, 5);
  CHECK(again.estimate.value == r.estimate.value);
}

TEST_CASE("mixture entropy argument errors") {
  const MixtureSpec mix = gaussian_mixture({0.5, 0.5}, {0.0, 3.0});
  CHECK_THROWS_AS(mixture_entropy_bound_check(mix, 2, 2, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(mixture_entropy_bound_check(mix, 0, 2, 10, 1), std::invalid_argument);
  MixtureSpec disc;
  disc.weights = {1.0};
  disc.components = {DiscreteMeasure::dirac({0.0})};
  CHECK_THROWS_AS(mixture_entropy_bound_check(disc, 1, 2, 10, 1), std::invalid_argument);
  CHECK(marginal_density(Gaussian1D{0.0, 1.0}, 0.0) == doctest::Approx(1.0 / std::sqrt(2 * M_PI)));
  CHECK_THROWS_AS(marginal_density(DiscreteMeasure::dirac({0.0}), 0.0), std::invalid_argument);
}
