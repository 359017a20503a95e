#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqot/bounds.hpp"
#include "seqot/ot.hpp"
#include "seqot/stats.hpp"

namespace seqot {

// ---------------------------------------------------------------------------
// potentials

/// V(x) = sum_k c_k x^k.
struct Polynomial1 {
  std::vector<double> coeffs;
  double operator()(double x) const;
  double derivative(double x) const;
  std::size_t degree() const noexcept { return coeffs.empty() ? 0 : coeffs.size() - 1; }
};

/// W(x, y) = sum_{i,j} c_ij x^i y^j; coeffs is (degree+1)^2, row i for x^i.
struct Polynomial2 {
  std::size_t degree = 0;
  std::vector<double> coeffs;

  static Polynomial2 zero();
  static Polynomial2 bilinear(double c);
  double operator()(double x, double y) const;
  double dx(double x, double y) const;
  bool is_zero() const;
};

struct GibbsParams {
  double J = 1.0, L = 2.0, N = 2.0, sigma = 1.0, A = 1.0, B = 1.0, C = 1.0;
};

struct GibbsSpec {
  Polynomial1 V;
  Polynomial2 W;
  GibbsParams params;

  /// V(x) = x^4, W(x, y) = coupling * x * y with constants that satisfy the
  /// growth conditions: J = max(coupling, 1e-3), L = 4, N = 3, sigma = 0.5,
  /// A = 1, B = 1, C = 4.
  static GibbsSpec quartic(double coupling);
};

struct GibbsCheck {
  std::string hypothesis;  ///< "gibbs 1)" ... "gibbs 4)"
  std::string description;
  bool ok = true;
  std::string detail;
};

/// Symmetry of W on random pairs and the growth bounds on W, V, V' over
/// sampled boxes of half-width 1, 10, 100.
std::vector<GibbsCheck> check_gibbs_spec(const GibbsSpec& spec, std::uint64_t seed = 1);
/// Throws HypothesisError for the first failing check.
void validate_gibbs_spec(const GibbsSpec& spec, std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// lattices and sampling

/// Interaction graph on sites 0..sites-1; edge (a, b) contributes W(x_a, x_b).
struct LatticeGraph {
  std::size_t sites = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// Ring over lattice indices -n..n stored at sites 0..2n: edges (k, k+1)
/// and the closing edge (2n, 0), i.e. W(x_n, x_{-n}).
LatticeGraph periodic_ring(std::size_t n);

/// The ring with the block -m..m cut out and closed on itself: drops edges
/// (m, m+1) and (-m-1, -m), adds (m, -m). Its Gibbs measure is mu_m x nu_{m,n}.
LatticeGraph split_ring(std::size_t n, std::size_t m);

struct McmcConfig {
  std::size_t chains = 4;
  std::size_t burn_in = 2000;       ///< sweeps; step sizes adapt here only
  std::size_t thinning = 5;         ///< sweeps between recorded states
  double initial_step = 1.0;
  double target_acceptance = 0.44;
  std::size_t adapt_interval = 50;
  std::uint64_t seed = 0;
};

struct LatticeSample {
  std::size_t n = 0;      ///< half-width: lattice indices -n..n
  std::size_t sites = 0;  ///< 2n + 1
  std::vector<double> states;             ///< count() x sites, chain-major
  std::vector<std::size_t> chain_sizes;   ///< states per chain
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  std::vector<double> acceptance;  ///< per site, after burn-in
  std::vector<double> step_sizes;  ///< per site, frozen after burn-in
  std::vector<double> ess;         ///< per site, batch-means estimate
  std::size_t shifts = 1;          ///< states are blocks of this many cyclic shifts

  std::size_t count() const noexcept { return sites ? states.size() / sites : 0; }
  std::span<const double> state(std::size_t k) const { return {states.data() + k * sites, sites}; }
  /// Storage index of lattice index i in -n..n.
  std::size_t site(long i) const { return static_cast<std::size_t>(i + static_cast<long>(n)); }
  /// Values of one site across all states.
  std::vector<double> column(std::size_t site) const;
};

/// Single-site random-walk Metropolis on an arbitrary interaction graph.
/// Chains run in parallel on seed-derived streams; the result does not
/// depend on the thread count. Throws SamplerError when a site's acceptance
/// leaves [0.05, 0.95] after adaptation.
LatticeSample sample_gibbs(const GibbsSpec& spec, const LatticeGraph& graph, std::size_t num_samples,
                           const McmcConfig& config);

/// sample_gibbs on periodic_ring(n) after validate_gibbs_spec.
LatticeSample sample_periodic_gibbs(const GibbsSpec& spec, std::size_t n, std::size_t num_samples,
                                    const McmcConfig& config);

/// Every state replaced by its cyclic shifts (x_{k-s})_k, s = 0..sites-1, or
/// by one uniformly drawn shift when `full` is false.
LatticeSample cyclic_symmetrize(const LatticeSample& sample, bool full = true, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// maps to the standard Gaussian

/// Standard normal points, count x dim.
std::vector<double> gaussian_cloud(std::size_t count, std::size_t dim, std::uint64_t seed);

/// Same cloud with each point expanded into its dim cyclic shifts.
std::vector<double> cyclic_expand(std::span<const double> cloud, std::size_t dim);

/// 0.05 times the median squared distance between points of two clouds
/// (on a strided subsample of at most 400 x 400 pairs).
double default_epsilon(std::span<const double> source, std::span<const double> target, std::size_t dim);

enum class MapMethod { quantile_1d, exact, entropic };
const char* to_string(MapMethod m);

struct EmpiricalMap {
  MapMethod method = MapMethod::entropic;
  std::size_t dim = 0;
  double epsilon = 0.0;
  std::vector<double> values;  ///< T(x_k) at the source points, count x dim
  std::optional<EntropicMap> extension;  ///< out-of-sample map (entropic only)
  bool converged = true;
};

/// Empirical map from a point cloud (uniform or given weights) to a Gaussian
/// cloud. One dimension with equal uniform clouds: sorted matching. At most
/// 300 points: exact transport and barycentric projection. Otherwise Sinkhorn
/// at `epsilon` (<= 0 selects default_epsilon) and the entropic map.
/// Throws SolverError when Sinkhorn does not converge.
EmpiricalMap empirical_map(std::span<const double> source, std::span<const double> target, std::size_t dim,
                           double epsilon = 0.0, std::span<const double> source_weights = {},
                           bool force_entropic = false);

EmpiricalMap empirical_map_to_gaussian(const LatticeSample& sample, std::span<const double> gaussian_samples,
                                       double epsilon = 0.0);

struct EquivarianceReport {
  std::vector<double> delta;  ///< per coordinate
  double max_delta = 0.0;
  double standard_error = 0.0;  ///< of the maximizing coordinate
  bool vanishes = true;         ///< max_delta <= 3 SE + 1e-10
};

/// delta_i = mean_k (T(sigma x_k)_i - T(x_k)_{i-1})^2. For a fully
/// symmetrized sample sigma x_k is another stored state and the stored map
/// values are used; otherwise the map's out-of-sample extension is applied.
EquivarianceReport equivariance_check(const LatticeSample& sample, const EmpiricalMap& map);

// ---------------------------------------------------------------------------
// entropy and convergence

/// Z = -W(x_m, x_{-m}) + W(x_m, x_{m+1}) + W(x_{-m-1}, x_{-m}) per state.
std::vector<double> block_log_ratio(const GibbsSpec& spec, const LatticeSample& sample, std::size_t m);

/// Ent(mu_n | mu_m x mu_{m,n}) = log E e^Z - E Z with a batch jackknife error.
EntropyEstimate entropy_mn_estimate(const GibbsSpec& spec, const LatticeSample& sample_n, std::size_t m);

/// Independent estimate E_{mu_n}[-Z] - log E_{mu_m x nu_{m,n}}[e^{-Z}] using
/// a second chain on split_ring(n, m).
EntropyEstimate entropy_mn_crosscheck(const GibbsSpec& spec, const LatticeSample& sample_n, std::size_t m,
                                      std::size_t num_samples, const McmcConfig& config);

/// Mean of exp(lambda |x_k|^power) over all sites and states.
stats::MeanEstimate exponential_moment(const LatticeSample& sample, double lambda, double power);

struct CauchyOptions {
  std::size_t ot_points = 2000;  ///< points per fold
  double epsilon = 0.0;          ///< <= 0: default_epsilon on the first fold
  McmcConfig mcmc;
  bool crosscheck_entropy = false;
};

struct CauchyRow {
  std::size_t m = 0;
  double D = 0.0, D_se = 0.0;  ///< surrogate-corrected
  double D_raw = 0.0;           ///< before the surrogate correction
  double entropy = 0.0, entropy_se = 0.0;
  double bound = 0.0;         ///< 2 Ent (K = 1)
  double combined_se = 0.0;   ///< sqrt(D_se^2 + 4 entropy_se^2)
  double per_coordinate = 0.0;///< D / (2m + 1)
  double weight_ess = 0.0;    ///< effective size of the e^Z weights, fraction
  std::optional<EntropyEstimate> crosscheck;
  bool pass = false;
};

struct CauchyReport {
  std::size_t n = 0;
  std::size_t samples = 0;
  std::size_t folds = 0;
  double epsilon = 0.0;
  std::vector<CauchyRow> rows;
  std::vector<double> acceptance;
  double min_ess = 0.0;
  stats::MeanEstimate second_moment;  ///< of x_0
  stats::MeanEstimate exp_moment;     ///< exp(0.1 |x|^N)
  bool pass = true;
};

/// D(m) = ∫ |T_n - (T_m, T_{m,n})|^2 dmu_n against 2 Ent for each m. The
/// sample is split into folds of ot_points states with independent Gaussian
/// clouds; every fold fits T_n and the block maps (the latter on the same
/// states reweighted by e^Z) at one common epsilon, and D is the average of
/// <a_i(x), a_j(x)> over fold pairs i != j and states x outside both, where
/// a_f = T_n^f - T~_m^f. The same estimate on a product surrogate (inner
/// blocks of the sample, outer blocks of an independent chain, unit weights,
/// same clouds) has discrepancy zero and is subtracted as the finite-sample
/// bias. The error is a delete-one-fold jackknife of the difference.
CauchyReport cauchy_convergence_experiment(const GibbsSpec& spec, const std::vector<std::size_t>& m_list,
                                           std::size_t n, std::size_t samples, const CauchyOptions& options);

}  // namespace seqot
