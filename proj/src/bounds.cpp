#include "seqot/bounds.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "seqot/error.hpp"

namespace seqot {

const char* to_string(EntropyMethod m) {
  switch (m) {
    case EntropyMethod::closed_form: return "closed_form";
    case EntropyMethod::quadrature: return "quadrature";
    case EntropyMethod::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// relative entropy

EntropyEstimate relative_entropy(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("relative_entropy: dimension mismatch");
  const DiscreteMeasure a = mu.merged(), b = nu.merged();
  std::map<std::vector<double>, double> mass;
  for (std::size_t j = 0; j < b.size(); ++j)
    mass.emplace(std::vector<double>(b.point(j).begin(), b.point(j).end()), b.weight(j));
  EntropyEstimate e;
  e.method = EntropyMethod::closed_form;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto it = mass.find(std::vector<double>(a.point(i).begin(), a.point(i).end()));
    if (it == mass.end()) throw SupportError("relative_entropy: atom of mu outside the support of nu");
    e.value += a.weight(i) * std::log(a.weight(i) / it->second);
  }
  e.value = std::max(e.value, 0.0);
  return e;
}

EntropyEstimate relative_entropy(const GaussianSpec& mu, const GaussianSpec& nu) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("relative_entropy: dimension mismatch");
  const auto d = static_cast<Eigen::Index>(mu.dim());
  const Eigen::Map<const Eigen::MatrixXd> s1(mu.covariance.data(), d, d), s2(nu.covariance.data(), d, d);
  const Eigen::Map<const Eigen::VectorXd> m1(mu.mean.data(), d), m2(nu.mean.data(), d);
  const Eigen::LLT<Eigen::MatrixXd> l1(s1), l2(s2);
  const Eigen::VectorXd dm = m2 - m1;
  const double trace = l2.solve(s1).trace();
  const double quad = dm.dot(l2.solve(dm));
  double logdet1 = 0.0, logdet2 = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    logdet1 += 2.0 * std::log(l1.matrixL()(i, i));
    logdet2 += 2.0 * std::log(l2.matrixL()(i, i));
  }
  EntropyEstimate e;
  e.method = EntropyMethod::closed_form;
  e.value = 0.5 * (trace + quad - static_cast<double>(d) + logdet2 - logdet1);
  return e;
}

EntropyEstimate relative_entropy(const Grid1D& mu, const Grid1D& nu) {
  const auto& x = mu.nodes();
  const auto& f = mu.density();
  const bool shared = x == nu.nodes();
  std::vector<double> h(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (f[i] == 0.0) continue;
    const double g = shared ? nu.density()[i] : nu.density_at(x[i]);
    if (!(g > 0.0)) throw SupportError("relative_entropy: mu has mass where nu has none");
    h[i] = f[i] * std::log(f[i] / g);
  }
  EntropyEstimate e;
  e.method = EntropyMethod::quadrature;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) e.value += 0.5 * (h[i] + h[i + 1]) * (x[i + 1] - x[i]);
  return e;
}

// ---------------------------------------------------------------------------
// densities, log-concavity, monotone maps

Grid1D density_grid(const Marginal1D& m, const QuadratureGrid& q) {
  if (const auto* g = std::get_if<Gaussian1D>(&m)) return gaussian_grid(*g, q.lo, q.hi, q.nodes);
  if (const auto* g = std::get_if<Grid1D>(&m)) return *g;
  throw std::invalid_argument("a density is required; discrete measures have none");
}

double certified_log_concavity(const Marginal1D& m) {
  if (const auto* g = std::get_if<Gaussian1D>(&m)) return 1.0 / (g->sd * g->sd);
  if (const auto* g = std::get_if<Grid1D>(&m)) {
    const auto& x = g->nodes();
    const auto& f = g->density();
    const double fmax = *std::max_element(f.begin(), f.end());
    double k = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
      if (f[i - 1] < 1e-12 * fmax || f[i] < 1e-12 * fmax || f[i + 1] < 1e-12 * fmax) continue;
      const double h1 = x[i] - x[i - 1], h2 = x[i + 1] - x[i];
      const double a = -std::log(f[i - 1]), b = -std::log(f[i]), c = -std::log(f[i + 1]);
      k = std::min(k, 2.0 * ((c - b) / h2 - (b - a) / h1) / (h1 + h2));
    }
    if (!std::isfinite(k)) throw HypothesisError("uniform log-concavity", "grid has no usable interior nodes");
    return k;
  }
  throw HypothesisError("uniform log-concavity", "target family not recognized (Gaussian or grid density required)");
}

namespace {

/// Monotone map onto `target` at the nodes of `src`.
std::vector<double> monotone_map_at_nodes(const Grid1D& src, const Marginal1D& target) {
  const std::vector<double> cdf = src.cdf(), surv = src.survival();
  const double total = cdf.back();
  std::vector<double> t(src.size());
  if (const auto* g = std::get_if<Gaussian1D>(&target)) {
    constexpr double tiny = 1e-300;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double F = cdf[i] / total, S = surv[i] / total;
      const double z = F <= 0.5 ? normal_quantile(std::max(F, tiny)) : -normal_quantile(std::max(S, tiny));
      t[i] = g->mean + g->sd * z;
    }
  } else if (const auto* g = std::get_if<Grid1D>(&target)) {
    const GridCdf inv(*g);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = inv.inverse(std::clamp(cdf[i] / total, 0.0, 1.0));
  } else {
    const Quantile1D q = quantile_from_discrete(std::get<DiscreteMeasure>(target));
    const std::vector<double> edges = q.cell_edges();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double F = cdf[i] / total;
      auto it = std::lower_bound(edges.begin(), edges.end(), F);
      t[i] = q.values[std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin()), q.size() - 1)];
    }
  }
  return t;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
  return s;
}

}  // namespace

TalagrandReport talagrand_gap(const Marginal1D& mu, const Marginal1D& nu, const Marginal1D& target, double K,
                              const QuadratureGrid& q, double tolerance) {
  const double certified = certified_log_concavity(target);
  if (!(certified > 0.0))
    throw HypothesisError("uniform log-concavity", "target is not uniformly log-concave (K <= 0)");
  if (K <= 0.0) K = certified;
  if (K > certified * (1.0 + 1e-9))
    throw HypothesisError("uniform log-concavity",
                          "requested K exceeds the certified constant " + std::to_string(certified));
  const Grid1D gm = density_grid(mu, q);
  Grid1D gn = density_grid(nu, q);
  if (gn.nodes() != gm.nodes()) {
    std::vector<double> f(gm.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = gn.density_at(gm.nodes()[i]);
    gn = Grid1D::normalized(gm.nodes(), std::move(f));
  }
  const std::vector<double> tm = monotone_map_at_nodes(gm, target);
  const std::vector<double> tn = monotone_map_at_nodes(gn, target);
  std::vector<double> integrand(gm.size());
  for (std::size_t i = 0; i < integrand.size(); ++i) {
    const double d = tm[i] - tn[i];
    integrand[i] = gm.density()[i] * d * d;
  }
  TalagrandReport r;
  r.K = K;
  r.resolution = gm.size();
  r.lhs = relative_entropy(gm, gn).value;
  r.rhs = 0.5 * K * trapezoid(gm.nodes(), integrand);
  r.slack = r.lhs - r.rhs;
  r.pass = r.slack >= -tolerance;
  return r;
}

// ---------------------------------------------------------------------------
// shift densities

double shift_density_norm(const Grid1D& mu, double s, double q, bool minus_one) {
  const auto& x = mu.nodes();
  const auto& f = mu.density();
  std::vector<double> h(x.size(), 0.0);
  std::vector<char> inside(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xs = x[i] - s;
    if (xs < mu.lo() || xs > mu.hi()) continue;
    inside[i] = 1;
    const double num = mu.density_at(xs);
    if (f[i] == 0.0) {
      if (num > 0.0) throw std::domain_error("shift density: mu vanishes on the shift window");
      continue;
    }
    const double ratio = num / f[i];
    h[i] = std::pow(minus_one ? std::abs(ratio - 1.0) : ratio, q) * f[i];
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (inside[i] && inside[i + 1]) total += 0.5 * (h[i] + h[i + 1]) * (x[i + 1] - x[i]);
  return total;
}

namespace {

/// Cubic Hermite interpolation of (phi, phi') on the nodes.
double hermite(const std::vector<double>& x, const std::vector<double>& phi, const std::vector<double>& dphi,
               double at) {
  auto it = std::upper_bound(x.begin(), x.end(), at);
  std::size_t j = static_cast<std::size_t>(it - x.begin());
  j = std::clamp<std::size_t>(j, 1, x.size() - 1);
  const std::size_t i = j - 1;
  const double h = x[j] - x[i];
  const double t = (at - x[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * phi[i] + (t3 - 2 * t2 + t) * h * dphi[i] + (-2 * t3 + 3 * t2) * phi[j] +
         (t3 - t2) * h * dphi[j];
}

double lp_moment(const Grid1D& nu, double power) {
  return nu.expectation([power](double y) { return std::pow(std::abs(y), power); });
}

}  // namespace

Lemma21Report lemma21_check(const Grid1D& mu, const Grid1D& nu, double t, double epsilon, double p, double q,
                            std::size_t shift_steps) {
  if (!(p > 1.0) || !(q > 1.0) || std::abs(1.0 / p + 1.0 / q - 1.0) > 1e-12)
    throw std::invalid_argument("lemma21_check: p, q must be finite conjugate exponents");
  if (!(t >= 0.0) || !(epsilon >= 0.0)) throw std::invalid_argument("lemma21_check: t and epsilon must be >= 0");
  if (shift_steps == 0) shift_steps = 1;

  const auto& x = mu.nodes();
  const auto& f = mu.density();
  const std::vector<double> T = monotone_map_at_nodes(mu, nu);
  std::vector<double> phi(x.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) phi[i + 1] = phi[i] + 0.5 * (T[i] + T[i + 1]) * (x[i + 1] - x[i]);

  std::vector<double> g1(x.size(), 0.0), g2(x.size(), 0.0);
  std::vector<char> inside(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] + t > mu.hi()) continue;
    inside[i] = 1;
    const double diff = hermite(x, phi, T, x[i] + t) - phi[i];
    g1[i] = std::pow(std::abs(diff), 1.0 + epsilon) * f[i];
    g2[i] = (diff - t * T[i]) * f[i];
  }
  Lemma21Report r;
  r.t = t;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (!inside[i] || !inside[i + 1]) continue;
    r.lhs1 += 0.5 * (g1[i] + g1[i + 1]) * (x[i + 1] - x[i]);
    r.lhs2 += 0.5 * (g2[i] + g2[i + 1]) * (x[i + 1] - x[i]);
  }

  r.moment1 = std::pow(lp_moment(nu, (1.0 + epsilon) * p), 1.0 / p);
  r.moment2 = std::pow(lp_moment(nu, p), 1.0 / p);
  for (std::size_t k = 0; k <= shift_steps; ++k) {
    const double s = t * static_cast<double>(k) / static_cast<double>(shift_steps);
    r.sup_shift = std::max(r.sup_shift, std::pow(shift_density_norm(mu, s, q, false), 1.0 / q));
    r.sup_shift_minus1 = std::max(r.sup_shift_minus1, std::pow(shift_density_norm(mu, s, q, true), 1.0 / q));
  }
  r.rhs1 = std::pow(t, 1.0 + epsilon) * r.moment1 * r.sup_shift;
  r.rhs2 = t * r.moment2 * r.sup_shift_minus1;
  r.slack1 = r.rhs1 - r.lhs1;
  r.slack2 = r.rhs2 - r.lhs2;
  r.pass1 = r.lhs1 <= r.rhs1 * (1.0 + 1e-6);
  r.pass2 = r.lhs2 <= r.rhs2 * (1.0 + 1e-6);
  return r;
}

AssumptionAReport assumption_A_probe(const Grid1D& mu, const Grid1D& nu, double p, double q, double epsilon,
                                     const std::vector<double>& t_grid, std::size_t shift_steps) {
  if (!(p > 1.0) || !(q > 1.0) || std::abs(1.0 / p + 1.0 / q - 1.0) > 1e-12)
    throw std::invalid_argument("assumption_A_probe: p, q must be finite conjugate exponents");
  if (t_grid.empty()) throw std::invalid_argument("assumption_A_probe: empty t grid");
  AssumptionAReport r;
  r.t = t_grid;
  std::sort(r.t.begin(), r.t.end());
  if (r.t.front() < 0.0) throw std::invalid_argument("assumption_A_probe: t must be >= 0");
  if (shift_steps == 0) shift_steps = 1;
  // p(t) = sup over s in [0, t]: evaluate on a dense ladder and take running maxima
  const double tmax = r.t.back();
  std::vector<double> s_ladder, value;
  for (std::size_t k = 0; k <= shift_steps; ++k) s_ladder.push_back(tmax * static_cast<double>(k) / static_cast<double>(shift_steps));
  for (double t : r.t) s_ladder.push_back(t);
  std::sort(s_ladder.begin(), s_ladder.end());
  s_ladder.erase(std::unique(s_ladder.begin(), s_ladder.end()), s_ladder.end());
  for (double s : s_ladder) value.push_back(shift_density_norm(mu, s, q, true));
  for (double t : r.t) {
    double sup = 0.0;
    for (std::size_t k = 0; k < s_ladder.size() && s_ladder[k] <= t; ++k) sup = std::max(sup, value[k]);
    r.p_of_t.push_back(sup);
  }
  r.moment = lp_moment(nu, (1.0 + epsilon) * p);
  r.moment_finite = std::isfinite(r.moment);
  const double pmin = r.p_of_t.front(), pmax = r.p_of_t.back();
  r.vanishes = pmax == 0.0 || pmin < 0.01 * pmax;
  return r;
}

}  // namespace seqot
