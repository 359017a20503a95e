#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqot/kernels.hpp"
#include "seqot/measures.hpp"

namespace seqot {

/// Ground cost c(x, y) for transport between discrete supports.
struct CostSpec {
  CostKind kind = CostKind::squared_euclidean;
  std::size_t coordinate = 0;
  std::function<double(std::span<const double>, std::span<const double>)> custom;

  static CostSpec quadratic() { return {}; }
  static CostSpec single_coordinate(std::size_t i) { return {CostKind::squared_coordinate, i, {}}; }
  static CostSpec from_function(std::function<double(std::span<const double>, std::span<const double>)> f) {
    return {CostKind::squared_euclidean, 0, std::move(f)};
  }

  bool is_custom() const { return static_cast<bool>(custom); }
  double operator()(std::span<const double> x, std::span<const double> y) const;
  std::string name() const;
};

/// Dense rows x cols table c(x_i, y_j).
std::vector<double> cost_table(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost,
                               Backend backend = Backend::parallel);

/// Joint weight table over two discrete supports.
class Coupling {
 public:
  static constexpr double kMarginalTol = 1e-10;

  Coupling() = default;
  /// Checks nonnegativity and both marginals within `marginal_tol`.
  Coupling(DiscreteMeasure source, DiscreteMeasure target, std::vector<double> weights,
           double marginal_tol = kMarginalTol);
  static Coupling product(DiscreteMeasure source, DiscreteMeasure target);

  const DiscreteMeasure& source() const noexcept { return source_; }
  const DiscreteMeasure& target() const noexcept { return target_; }
  std::size_t rows() const noexcept { return source_.size(); }
  std::size_t cols() const noexcept { return target_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return weights_[i * cols() + j]; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double cost(const CostSpec& c) const;
  double total_mass() const;
  /// Largest deviation of a row or column sum from its marginal weight.
  double marginal_error() const;

 private:
  DiscreteMeasure source_;
  DiscreteMeasure target_;
  std::vector<double> weights_;
};

/// Potentials of the cost-form dual: phi_i + psi_j <= c(x_i, y_j).
struct DualPair {
  std::vector<double> phi;
  std::vector<double> psi;

  double value(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const;
  /// max_ij (phi_i + psi_j - c_ij); <= 0 for a feasible pair.
  double max_violation(std::span<const double> cost_table) const;
};

/// For the quadratic cost |x - y|^2, the convex potentials of the
/// inner-product form phi~(x) + psi~(y) >= <x, y> are
/// phi~(x) = (|x|^2 - phi(x)) / 2, psi~(y) = (|y|^2 - psi(y)) / 2.
DualPair to_inner_product_form(const DualPair& d, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

enum class OtMethod { network_simplex, dense_simplex };

struct OtOptions {
  OtMethod method = OtMethod::network_simplex;
  std::size_t max_atoms = 4000;  ///< per side
  Backend backend = Backend::parallel;
};

struct OtResult {
  Coupling plan;
  DualPair duals;
  double value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;             ///< value - dual_value
  double dual_violation = 0.0;  ///< max_ij (phi_i + psi_j - c_ij), clipped at 0
  std::size_t iterations = 0;
  double wall_seconds = 0.0;
};

OtResult solve_discrete_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const CostSpec& cost = CostSpec::quadratic(), const OtOptions& options = {});

/// Monotone 1D map T = Q_nu o F_mu on a shared quantile grid.
struct Transport1D {
  std::vector<double> source_values;  ///< Q_mu on the shared cells
  std::vector<double> target_values;  ///< Q_nu on the shared cells
  std::vector<double> masses;
  double w2sq = 0.0;

  /// Evaluates T at x by interpolating the (Q_mu, Q_nu) pairs.
  double operator()(double x) const;
};

/// With `resample` the two quantile functions are refined onto the union of
/// their cell edges (exact for piecewise-constant quantiles); without it the
/// cells must coincide.
Transport1D quantile_transport_1d(const Quantile1D& mu, const Quantile1D& nu, bool resample = true);

struct SinkhornOptions {
  double epsilon = 1e-2;
  std::size_t max_iterations = 10'000;
  double tol = 1e-9;  ///< total-variation violation of the row marginal
  bool epsilon_scaling = true;
  Backend backend = Backend::parallel;
};

struct SinkhornResult {
  Coupling plan;
  std::vector<double> f;  ///< row potential
  std::vector<double> g;  ///< column potential
  double epsilon = 0.0;
  std::size_t iterations = 0;
  double violation = 0.0;
  bool converged = false;
  double value = 0.0;  ///< transport part <C, P>
};

/// Log-domain Sinkhorn with an epsilon-halving schedule. Non-convergence is
/// reported through `converged`, never thrown.
SinkhornResult sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost,
                        const SinkhornOptions& options = {});

/// Out-of-sample extension of an entropic plan for the quadratic cost:
///   T(x) = sum_j y_j b_j exp((g_j - |x - y_j|^2) / eps) / normalizer.
/// On the source atoms it coincides with the barycentric map of the plan.
class EntropicMap {
 public:
  EntropicMap(const SinkhornResult& result);
  std::size_t dim() const noexcept { return dim_; }
  /// queries: n * dim, returns n * dim.
  std::vector<double> apply(std::span<const double> queries, Backend backend = Backend::parallel) const;

 private:
  std::size_t dim_;
  std::vector<double> targets_;
  std::vector<double> offset_;
  double inv_eps_;
};

/// T(x_i) = sum_j pi_ij y_j / sum_j pi_ij, flattened (rows * target dim).
std::vector<double> barycentric_map(const Coupling& plan);

struct CycleReport {
  bool pass = true;
  std::size_t support_size = 0;
  std::size_t max_length = 0;
  /// Violating cycle as (source atom, target atom) pairs of the support,
  /// listed in cycle order; empty when the plan passes.
  std::vector<std::pair<std::size_t, std::size_t>> cycle;
  /// sum c(x_k, y_k+1) - sum c(x_k, y_k) for the reported cycle (< 0).
  double excess = 0.0;
};

/// Searches cycles of length <= max_length through the support of the plan
/// for a cyclic reassignment that lowers the cost.
CycleReport check_cyclical_monotonicity(const Coupling& plan, std::size_t max_length,
                                        const CostSpec& cost = CostSpec::quadratic(),
                                        double tol = 1e-9);

/// Fraction of source mass whose conditional law (targets at identical
/// positions merged) is within `tol` of a point mass in total variation.
double graph_concentration(const Coupling& plan, double tol);

}  // namespace seqot
