#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "seqot/bounds.hpp"
#include "seqot/measures.hpp"
#include "seqot/ot.hpp"

namespace seqot {

// ---------------------------------------------------------------------------
// products and diagonal maps

struct ProductSpec {
  std::vector<Marginal1D> factors;  ///< one law per coordinate
  std::size_t size() const noexcept { return factors.size(); }
};

struct DiagonalTransport {
  std::vector<Transport1D> maps;     ///< coordinatewise monotone maps
  std::vector<double> w2sq;          ///< per-coordinate cost
  std::vector<double> partial_sums;  ///< truncated sums of w2sq
  double total = 0.0;
};

DiagonalTransport diagonal_transport(const ProductSpec& p, const ProductSpec& q, std::size_t resolution = 10000);

// ---------------------------------------------------------------------------
// quasi-product measures

/// Cylindrical density factor on the first arity() coordinates, up to
/// normalization: exp(sum_i a_i x_i) * (1 + amplitude * tanh(scale * x_1 ... x_k)).
struct CylinderTilt {
  std::vector<double> linear;  ///< a_1..a_k; k = arity
  double amplitude = 0.0;      ///< |amplitude| < 1
  double scale = 1.0;

  std::size_t arity() const noexcept { return linear.size(); }
  bool constant() const;
  double operator()(std::span<const double> x) const;
};

struct QuasiProductSpec {
  ProductSpec p;  ///< reference product for mu
  ProductSpec q;  ///< reference product for nu
  CylinderTilt f;  ///< mu = f P
  CylinderTilt g;  ///< nu = g Q
};

struct QuasiProductOptions {
  std::vector<std::size_t> n_list{1, 2, 3};
  std::size_t max_core_nodes = 1000;  ///< tensor grid size cap on the tilted coordinates
  double tolerance = 1e-6;
};

struct QuasiProductLevel {
  std::size_t n = 0;
  std::size_t core = 0;        ///< coordinates carrying the tilts
  std::size_t nodes = 0;       ///< atoms of the discretized mu_n
  double f_entropy = 0.0;      ///< ∫ f_n log f_n dP_n
  double diagonal_gap = 0.0;   ///< ∫ |T_n - diagonal map|^2 dmu_n
  double value = 0.0;          ///< W_2^2(mu_n, nu_n) on the core coordinates
};

struct QuasiProductPair {
  std::size_t m = 0, n = 0;
  double D = 0.0;        ///< ∫ |T_n - T~_m|^2 dmu_n
  double entropy = 0.0;  ///< ∫ log(f_n / f_m) dmu_n
  double bound = 0.0;    ///< (2 / K) entropy; NaN when not asserted
  bool asserted = false; ///< m >= arity of g, so T~_m pushes onto nu_n
  bool pass = true;
};

struct QuasiProductReport {
  std::vector<QuasiProductLevel> levels;
  std::vector<QuasiProductPair> pairs;
  double K = 0.0;              ///< log-concavity constant of nu on the core box
  double contraction = 0.0;    ///< Caffarelli bound M on the S_i'
  double g_min = 0.0, g_max = 0.0;
  double f_log_f = 0.0;        ///< ∫ f log f dP on the finest grid
  bool jensen_monotone = true; ///< ∫ f_n log f_n dP nondecreasing and <= ∫ f log f dP
  std::size_t resolution = 0;  ///< quantile cells per core coordinate
  bool pass = true;
};

/// Discretizes mu_n = f_n P_n and nu_n = g_n Q_n on tensor grids of quantile
/// cells, solves each level exactly and compares T_n with the block map
/// T~_m = (T_m, diagonal maps). Hypothesis failures raise HypothesisError
/// named "quasi-product 1)" ... "quasi-product 4)".
QuasiProductReport quasi_product_approx(const QuasiProductSpec& spec, const QuasiProductOptions& options = {});

// ---------------------------------------------------------------------------
// mixtures

struct MixtureSpec {
  std::vector<double> weights;
  std::vector<Marginal1D> components;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return weights.size(); }
  /// Positive weights summing to one within 1e-12, one component each.
  void validate() const;
};

/// Stable text key of a one-dimensional law, used to cache quantile
/// tabulations and W_2 costs.
std::string marginal_key(const Marginal1D& m);

/// W_2^2 between two laws by quantile_transport_1d at the given resolution;
/// memoized per (key, key, resolution).
double cached_w2sq(const Marginal1D& a, const Marginal1D& b, std::size_t resolution = 10000);
void clear_w2_cache();
std::size_t w2_cache_size();

struct DeFinettiResult {
  std::vector<double> ground_cost;  ///< K x L, W_2^2(m_k, p_l)
  Coupling outer;                   ///< plan between component indices
  double value = 0.0;
  double concentration = 0.0;
  bool is_map = false;
  std::vector<std::size_t> assignment;    ///< F(k) when is_map
  std::vector<Transport1D> component_maps;///< T_{m_k, F(m_k)} when is_map
};

DeFinettiResult definetti_ot(const MixtureSpec& mu, const MixtureSpec& nu, std::size_t resolution = 10000);

/// Test function by name: x, x2, x3, abs, tanh, sin, cos, atan, gauss (e^{-x^2}).
double test_function(const std::string& name, double x);
bool known_test_function(const std::string& name);

/// Expectation of a named test function under a one-dimensional law.
double component_moment(const Marginal1D& m, const std::string& name);

struct Classification {
  std::size_t component = 0;  ///< 0-based
  double margin = std::numeric_limits<double>::infinity();
  bool ambiguous = false;
  std::vector<double> empirical;  ///< path averages of the test functions
  std::vector<double> distances;  ///< per component
};

Classification classify_component(std::span<const double> path, const MixtureSpec& mixture,
                                  const std::vector<std::string>& test_functions);

struct MixtureEntropyReport {
  EntropyEstimate estimate;
  double bound = 0.0;  ///< -log min lambda
  std::size_t m = 0, n = 0;
  std::size_t skipped = 0;  ///< samples where a density vanished
  bool pass = false;
};

/// Monte Carlo estimate of ∫ log rho_{m,n} dmu for the exchangeable mixture
/// mu = sum lambda_i m_i^infinity, with i.i.d. seed-derived chunks.
MixtureEntropyReport mixture_entropy_bound_check(const MixtureSpec& mixture, std::size_t m, std::size_t n,
                                                 std::size_t samples, std::uint64_t seed);

/// Density of a one-dimensional law; throws std::invalid_argument for
/// discrete laws.
double marginal_density(const Marginal1D& m, double x);

}  // namespace seqot
