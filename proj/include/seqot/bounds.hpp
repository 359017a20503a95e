#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "seqot/measures.hpp"

namespace seqot {

enum class EntropyMethod { closed_form, quadrature, monte_carlo };

const char* to_string(EntropyMethod m);

struct EntropyEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  EntropyMethod method = EntropyMethod::closed_form;
  std::size_t samples = 0;  ///< Monte Carlo sample count; 0 otherwise
};

/// Ent(mu | nu) = ∫ log(dmu/dnu) dmu.
/// Discrete: exact sum over merged atoms; throws SupportError when an atom of
/// mu carries no nu mass.
EntropyEstimate relative_entropy(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
/// Closed form for Gaussians.
EntropyEstimate relative_entropy(const GaussianSpec& mu, const GaussianSpec& nu);
/// Trapezoid quadrature on the nodes of mu; nu is interpolated there.
EntropyEstimate relative_entropy(const Grid1D& mu, const Grid1D& nu);

struct QuadratureGrid {
  double lo = -10.0;
  double hi = 10.0;
  std::size_t nodes = 10001;
};

/// Tabulated density of a 1D law with a density (Gaussian or grid; a grid is
/// passed through unchanged). Discrete laws are rejected.
Grid1D density_grid(const Marginal1D& m, const QuadratureGrid& q = {});

/// Largest K with (-log m)'' >= K: 1/sd^2 for Gaussians, a central
/// finite-difference bound on the nodes where the density is positive for
/// grids. Throws HypothesisError for other families.
double certified_log_concavity(const Marginal1D& m);

struct TalagrandReport {
  double lhs = 0.0;  ///< Ent_nu(mu / nu)
  double rhs = 0.0;  ///< K/2 ∫ (T_mu - T_nu)^2 dmu
  double slack = 0.0;
  double K = 0.0;
  std::size_t resolution = 0;
  bool pass = false;
};

/// Both maps are monotone rearrangements onto `target`. K <= 0 selects the
/// certified constant; a K above the certified one raises HypothesisError.
TalagrandReport talagrand_gap(const Marginal1D& mu, const Marginal1D& nu, const Marginal1D& target, double K = 0.0,
                              const QuadratureGrid& q = {}, double tolerance = 1e-8);

struct Lemma21Report {
  double t = 0.0;
  double lhs1 = 0.0, rhs1 = 0.0;  ///< first estimate
  double lhs2 = 0.0, rhs2 = 0.0;  ///< second estimate
  double slack1 = 0.0, slack2 = 0.0;
  double moment1 = 0.0;         ///< ‖|y|^{1+eps}‖_{L^p(nu)}
  double moment2 = 0.0;         ///< ‖y‖_{L^p(nu)}
  double sup_shift = 0.0;       ///< sup_s ‖e^{beta_s}‖_{L^q(mu)}
  double sup_shift_minus1 = 0.0;///< sup_s ‖e^{beta_s} - 1‖_{L^q(mu)}
  bool pass1 = false, pass2 = false;
};

/// Both shift-density estimates for the potential of the monotone map of mu
/// onto nu, in direction e = +1, by trapezoid quadrature on mu's nodes.
Lemma21Report lemma21_check(const Grid1D& mu, const Grid1D& nu, double t, double epsilon, double p, double q,
                            std::size_t shift_steps = 64);

/// ∫ |e^{beta_s} - 1|^q dmu (minus_one) or ∫ e^{q beta_s} dmu, with
/// e^{beta_s}(x) = mu(x - s) / mu(x) on the window clipped to the grid.
double shift_density_norm(const Grid1D& mu, double s, double q, bool minus_one);

struct AssumptionAReport {
  std::vector<double> t;
  std::vector<double> p_of_t;
  double moment = 0.0;  ///< ∫ |y|^{(1+eps)p} dnu
  bool moment_finite = true;
  bool vanishes = false;  ///< p(t) nondecreasing and p(t_min) < 0.01 p(t_max)
};

AssumptionAReport assumption_A_probe(const Grid1D& mu, const Grid1D& nu, double p, double q, double epsilon,
                                     const std::vector<double>& t_grid, std::size_t shift_steps = 64);

}  // namespace seqot
