#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqot/measures.hpp"
#include "seqot/ot.hpp"

namespace seqot {

using Permutation = std::vector<std::size_t>;

/// Finite group of coordinate permutations, stored as its full element list.
/// An element g acts on points by (L_g x)_{g[i]} = x_i, so L_g L_h = L_{g o h}.
class GroupAction {
 public:
  static constexpr std::size_t kMaxSize = 5040;

  GroupAction() = default;

  /// Builds the group generated by `generators` (0-based permutations).
  /// Throws std::length_error once the group exceeds max_size elements.
  static GroupAction closure(std::size_t dim, const std::vector<Permutation>& generators,
                             std::size_t max_size = kMaxSize);
  static GroupAction trivial(std::size_t dim);
  static GroupAction cyclic(std::size_t dim);
  static GroupAction symmetric(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t order() const noexcept { return elements_.size(); }
  const std::vector<Permutation>& elements() const noexcept { return elements_; }
  const std::vector<Permutation>& generators() const noexcept { return generators_; }

  /// reach(i, j): some element maps coordinate i to j.
  bool reach(std::size_t i, std::size_t j) const { return reach_[i * dim_ + j]; }
  bool transitive() const;

  void apply(std::size_t g, std::span<const double> x, std::span<double> out) const;
  std::vector<double> apply(std::size_t g, std::span<const double> x) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Permutation> generators_;
  std::vector<Permutation> elements_;
  std::vector<char> reach_;
};

/// Closure from 1-based generator lists such as (2,3,1).
GroupAction closure_from_generators(std::size_t dim, const std::vector<std::vector<std::size_t>>& generators,
                                    std::size_t max_size = GroupAction::kMaxSize);

/// f̄(x) = |G|^-1 sum_g f(L_g^-1 x) for a function tabulated on a G-stable
/// point set (flat coordinates, dim = G.dim()).
std::vector<double> haar_project(std::span<const double> f, std::span<const double> points, const GroupAction& g);

/// Haar average of a measure: every atom spread uniformly over its orbit.
DiscreteMeasure symmetrize_measure(const DiscreteMeasure& m, const GroupAction& g);

/// Largest |w(L_g x) - w(x)| over atoms after merging duplicates; +inf when
/// the support is not G-stable.
double invariance_defect(const DiscreteMeasure& m, const GroupAction& g);

/// Average of g.plan over the group under the diagonal action.
Coupling symmetrize_coupling(const Coupling& plan, const GroupAction& g);

struct InvariantOtResult {
  Coupling plan;                 ///< invariant optimal plan on the closed supports
  double value = 0.0;            ///< primal value over invariant plans
  std::size_t source_orbits = 0;
  std::size_t target_orbits = 0;
  std::size_t pair_orbits = 0;   ///< LP variables
  std::size_t iterations = 0;
};

/// Minimizes the cost over G-invariant plans with one LP variable per orbit
/// of support pairs under the diagonal action.
InvariantOtResult solve_invariant_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroupAction& g,
                                     const CostSpec& cost = CostSpec::single_coordinate(0));

struct InvariantDual {
  double value = 0.0;
  DualPair potentials;   ///< φ̄ on the closed source support, ψ̄ on the closed target support
  DiscreteMeasure source;
  DiscreteMeasure target;
  double max_violation = 0.0;  ///< max φ̄(x) + ψ̄(y) - c̄(x, y) over all support pairs
  bool invariant = true;       ///< potentials constant on orbits
};

/// sup ∫φ̄ dμ + ∫ψ̄ dν over invariant pairs with φ̄(x) + ψ̄(y) <= c̄(x, y),
/// c̄ the Haar projection of the cost under the diagonal action.
InvariantDual invariant_duality_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroupAction& g,
                                      const CostSpec& cost = CostSpec::single_coordinate(0));

struct TransitiveIdentityReport {
  double full_value = 0.0;       ///< W_2^2 with the quadratic cost
  double invariant_value = 0.0;  ///< invariant single-coordinate value
  double scaled_invariant = 0.0; ///< dim * invariant_value
  double abs_difference = 0.0;
  double rel_difference = 0.0;   ///< abs_difference / (1 + full_value)
  /// Per-coordinate costs of the symmetrized optimal full plan.
  std::vector<double> coordinate_costs;
  double coordinate_spread = 0.0;
};

/// Requires a transitive group (throws HypothesisError otherwise).
TransitiveIdentityReport transitive_identity_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                                   const GroupAction& g);

struct NoMapReport {
  DiscreteMeasure source;
  DiscreteMeasure target;
  InvariantOtResult solution;
  double concentration = 0.0;
  bool identical_components = false;
};

/// mu = a^d, nu = (a^d + b^d) / 2, optimal invariant plan and its graph
/// concentration.
NoMapReport no_map_counterexample(const DiscreteMeasure& a, const DiscreteMeasure& b, std::size_t d,
                                  const GroupAction& g, double tol = 1e-9);

/// Product measure m^d of a 1D discrete measure.
DiscreteMeasure product_power(const DiscreteMeasure& m, std::size_t d);

}  // namespace seqot
