#include "seqot/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "seqot/error.hpp"
#include "seqot/lp.hpp"

namespace seqot {

namespace {

void check_permutation(const Permutation& p, std::size_t dim) {
  if (p.size() != dim) throw std::invalid_argument("group: permutation length differs from dim");
  std::vector<char> seen(dim, 0);
  for (std::size_t v : p) {
    if (v >= dim || seen[v]) throw std::invalid_argument("group: not a permutation");
    seen[v] = 1;
  }
}

Permutation compose(const Permutation& s, const Permutation& e) {
  Permutation out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = s[e[i]];
  return out;
}

/// Exact-coordinate lookup of the atoms of a point set.
class PointIndex {
 public:
  PointIndex(std::span<const double> coords, std::size_t dim) : dim_(dim) {
    const std::size_t n = dim ? coords.size() / dim : 0;
    for (std::size_t i = 0; i < n; ++i)
      index_.emplace(std::vector<double>(coords.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                         coords.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim)),
                     i);
  }

  std::size_t find(std::span<const double> x) const {
    auto it = index_.find(std::vector<double>(x.begin(), x.end()));
    return it == index_.end() ? npos : it->second;
  }
  bool unique(std::size_t n) const { return index_.size() == n; }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

 private:
  std::size_t dim_;
  std::map<std::vector<double>, std::size_t> index_;
};

/// images[g * n + i] = index of L_g x_i in the same point set.
std::vector<std::size_t> orbit_table(const DiscreteMeasure& m, const GroupAction& g, const char* who) {
  if (m.dim() != g.dim()) throw std::invalid_argument(std::string(who) + ": measure and group dimensions differ");
  const PointIndex index(m.coords(), m.dim());
  const std::size_t n = m.size();
  std::vector<std::size_t> images(g.order() * n);
  std::vector<double> y(m.dim());
  for (std::size_t e = 0; e < g.order(); ++e)
    for (std::size_t i = 0; i < n; ++i) {
      g.apply(e, m.point(i), y);
      const std::size_t j = index.find(y);
      if (j == PointIndex::npos) throw std::invalid_argument(std::string(who) + ": support is not G-stable");
      images[e * n + i] = j;
    }
  return images;
}

/// Orbit label per point, labels in order of first appearance.
std::vector<std::size_t> orbit_labels(const std::vector<std::size_t>& images, std::size_t n, std::size_t order,
                                      std::size_t& count) {
  std::vector<std::size_t> label(n, PointIndex::npos);
  count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != PointIndex::npos) continue;
    for (std::size_t e = 0; e < order; ++e) label[images[e * n + i]] = count;
    ++count;
  }
  return label;
}

/// Merges duplicate atoms, closes the support under the action (new atoms
/// get weight zero) and checks that the weights are invariant.
struct ClosedSupport {
  std::vector<double> coords;
  std::vector<double> weights;
};

ClosedSupport close_support(const DiscreteMeasure& m, const GroupAction& g, const char* who) {
  if (m.dim() != g.dim()) throw std::invalid_argument(std::string(who) + ": measure and group dimensions differ");
  const DiscreteMeasure merged = m.merged();
  ClosedSupport out{merged.coords(), merged.weights()};
  std::map<std::vector<double>, std::size_t> index;
  for (std::size_t i = 0; i < merged.size(); ++i)
    index.emplace(std::vector<double>(merged.point(i).begin(), merged.point(i).end()), i);
  std::vector<double> y(m.dim());
  for (std::size_t i = 0; i < out.weights.size(); ++i) {
    for (std::size_t e = 0; e < g.order(); ++e) {
      g.apply(e, std::span<const double>(out.coords.data() + i * m.dim(), m.dim()), y);
      if (index.emplace(y, out.weights.size()).second) {
        out.coords.insert(out.coords.end(), y.begin(), y.end());
        out.weights.push_back(0.0);
      }
    }
  }
  const std::size_t n = out.weights.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = 0; e < g.order(); ++e) {
      g.apply(e, std::span<const double>(out.coords.data() + i * m.dim(), m.dim()), y);
      const double w = out.weights[index.at(y)];
      if (std::abs(w - out.weights[i]) > 1e-9)
        throw std::invalid_argument(std::string(who) + ": marginal is not G-invariant");
    }
  return out;
}

struct OrbitStructure {
  DiscreteMeasure source, target;
  std::vector<std::size_t> src_images, tgt_images;
  std::vector<std::size_t> src_label, tgt_label;
  std::size_t src_orbits = 0, tgt_orbits = 0;
  std::vector<double> src_mass, tgt_mass;
};

OrbitStructure orbit_structure(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroupAction& g,
                               const char* who) {
  OrbitStructure s;
  ClosedSupport cm = close_support(mu, g, who), cn = close_support(nu, g, who);
  s.source = DiscreteMeasure(mu.dim(), std::move(cm.coords), std::move(cm.weights));
  s.target = DiscreteMeasure(nu.dim(), std::move(cn.coords), std::move(cn.weights));
  s.src_images = orbit_table(s.source, g, who);
  s.tgt_images = orbit_table(s.target, g, who);
  s.src_label = orbit_labels(s.src_images, s.source.size(), g.order(), s.src_orbits);
  s.tgt_label = orbit_labels(s.tgt_images, s.target.size(), g.order(), s.tgt_orbits);
  s.src_mass.assign(s.src_orbits, 0.0);
  s.tgt_mass.assign(s.tgt_orbits, 0.0);
  for (std::size_t i = 0; i < s.source.size(); ++i) s.src_mass[s.src_label[i]] += s.source.weight(i);
  for (std::size_t j = 0; j < s.target.size(); ++j) s.tgt_mass[s.tgt_label[j]] += s.target.weight(j);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// GroupAction

GroupAction GroupAction::closure(std::size_t dim, const std::vector<Permutation>& generators, std::size_t max_size) {
  if (dim == 0) throw std::invalid_argument("group: dim must be positive");
  for (const auto& p : generators) check_permutation(p, dim);
  GroupAction g;
  g.dim_ = dim;
  g.generators_ = generators;
  Permutation id(dim);
  std::iota(id.begin(), id.end(), std::size_t{0});
  std::set<Permutation> seen{id};
  std::deque<Permutation> queue{id};
  g.elements_.push_back(id);
  while (!queue.empty()) {
    const Permutation e = queue.front();
    queue.pop_front();
    for (const auto& s : generators) {
      Permutation next = compose(s, e);
      if (seen.insert(next).second) {
        if (seen.size() > max_size)
          throw std::length_error("group closure exceeds the size cap of " + std::to_string(max_size) +
                                  " elements");
        g.elements_.push_back(next);
        queue.push_back(std::move(next));
      }
    }
  }
  g.reach_.assign(dim * dim, 0);
  for (const auto& e : g.elements_)
    for (std::size_t i = 0; i < dim; ++i) g.reach_[i * dim + e[i]] = 1;
  return g;
}

GroupAction GroupAction::trivial(std::size_t dim) { return closure(dim, {}); }

GroupAction GroupAction::cyclic(std::size_t dim) {
  Permutation shift(dim);
  for (std::size_t i = 0; i < dim; ++i) shift[i] = (i + 1) % dim;
  return closure(dim, {shift});
}

GroupAction GroupAction::symmetric(std::size_t dim) {
  if (dim < 2) return trivial(dim);
  Permutation swap(dim), cycle(dim);
  std::iota(swap.begin(), swap.end(), std::size_t{0});
  std::swap(swap[0], swap[1]);
  for (std::size_t i = 0; i < dim; ++i) cycle[i] = (i + 1) % dim;
  return closure(dim, {swap, cycle});
}

bool GroupAction::transitive() const {
  for (std::size_t j = 0; j < dim_; ++j)
    if (!reach_[j]) return false;
  return true;
}

void GroupAction::apply(std::size_t g, std::span<const double> x, std::span<double> out) const {
  const Permutation& p = elements_[g];
  for (std::size_t i = 0; i < dim_; ++i) out[p[i]] = x[i];
}

std::vector<double> GroupAction::apply(std::size_t g, std::span<const double> x) const {
  std::vector<double> out(dim_);
  apply(g, x, out);
  return out;
}

GroupAction closure_from_generators(std::size_t dim, const std::vector<std::vector<std::size_t>>& generators,
                                    std::size_t max_size) {
  std::vector<Permutation> zero_based;
  for (const auto& gen : generators) {
    Permutation p;
    for (std::size_t v : gen) {
      if (v == 0) throw std::invalid_argument("group: generators are 1-based");
      p.push_back(v - 1);
    }
    zero_based.push_back(std::move(p));
  }
  return GroupAction::closure(dim, zero_based, max_size);
}

// ---------------------------------------------------------------------------
// Haar averages

std::vector<double> haar_project(std::span<const double> f, std::span<const double> points, const GroupAction& g) {
  const std::size_t d = g.dim();
  if (points.size() % d != 0 || points.size() / d != f.size())
    throw std::invalid_argument("haar_project: one value per point required");
  const PointIndex index(points, d);
  const std::size_t n = f.size();
  std::vector<double> out(n), y(d);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t e = 0; e < g.order(); ++e) {
      g.apply(e, points.subspan(i * d, d), y);
      const std::size_t j = index.find(y);
      if (j == PointIndex::npos) throw std::invalid_argument("haar_project: point set is not G-stable");
      acc += f[j];
    }
    out[i] = acc / static_cast<double>(g.order());
  }
  return out;
}

DiscreteMeasure symmetrize_measure(const DiscreteMeasure& m, const GroupAction& g) {
  if (m.dim() != g.dim()) throw std::invalid_argument("symmetrize_measure: dimension mismatch");
  std::vector<double> coords, weights;
  std::vector<double> y(m.dim());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t e = 0; e < g.order(); ++e) {
      g.apply(e, m.point(i), y);
      coords.insert(coords.end(), y.begin(), y.end());
      weights.push_back(m.weight(i) / static_cast<double>(g.order()));
    }
  return DiscreteMeasure(m.dim(), std::move(coords), std::move(weights)).merged();
}

double invariance_defect(const DiscreteMeasure& m, const GroupAction& g) {
  const DiscreteMeasure merged = m.merged();
  const PointIndex index(merged.coords(), merged.dim());
  double defect = 0.0;
  std::vector<double> y(m.dim());
  for (std::size_t i = 0; i < merged.size(); ++i)
    for (std::size_t e = 0; e < g.order(); ++e) {
      g.apply(e, merged.point(i), y);
      const std::size_t j = index.find(y);
      if (j == PointIndex::npos) return std::numeric_limits<double>::infinity();
      defect = std::max(defect, std::abs(merged.weight(j) - merged.weight(i)));
    }
  return defect;
}

Coupling symmetrize_coupling(const Coupling& plan, const GroupAction& g) {
  const DiscreteMeasure& mu = plan.source();
  const DiscreteMeasure& nu = plan.target();
  if (!PointIndex(mu.coords(), mu.dim()).unique(mu.size()) || !PointIndex(nu.coords(), nu.dim()).unique(nu.size()))
    throw std::invalid_argument("symmetrize_coupling: supports must not contain duplicate atoms");
  for (const DiscreteMeasure* m : {&mu, &nu}) {
    const double defect = invariance_defect(*m, g);
    if (std::isinf(defect)) throw std::invalid_argument("symmetrize_coupling: support is not G-stable");
    if (defect > 1e-9) throw std::invalid_argument("symmetrize_coupling: marginal is not G-invariant");
  }
  const auto si = orbit_table(mu, g, "symmetrize_coupling");
  const auto ti = orbit_table(nu, g, "symmetrize_coupling");
  const std::size_t m = mu.size(), n = nu.size();
  std::vector<double> w(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t e = 0; e < g.order(); ++e) acc += plan(si[e * m + i], ti[e * n + j]);
      w[i * n + j] = acc / static_cast<double>(g.order());
    }
  return Coupling(mu, nu, std::move(w));
}

// ---------------------------------------------------------------------------
// invariant transport

InvariantOtResult solve_invariant_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroupAction& g,
                                     const CostSpec& cost) {
  const OrbitStructure s = orbit_structure(mu, nu, g, "solve_invariant_ot");
  const std::size_t m = s.source.size(), n = s.target.size(), order = g.order();

  // orbits of support pairs under the diagonal action
  std::vector<std::size_t> pair_orbit(m * n, PointIndex::npos);
  std::vector<std::vector<std::size_t>> members;
  std::vector<double> cbar;
  std::vector<std::size_t> row_of, col_of;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (pair_orbit[i * n + j] != PointIndex::npos) continue;
      const std::size_t id = members.size();
      std::vector<std::size_t> orbit;
      for (std::size_t e = 0; e < order; ++e) {
        const std::size_t k = s.src_images[e * m + i] * n + s.tgt_images[e * n + j];
        if (pair_orbit[k] == PointIndex::npos) {
          pair_orbit[k] = id;
          orbit.push_back(k);
        }
      }
      double c = 0.0;
      for (std::size_t k : orbit) c += cost(s.source.point(k / n), s.target.point(k % n));
      cbar.push_back(c / static_cast<double>(orbit.size()));
      row_of.push_back(s.src_label[i]);
      col_of.push_back(s.tgt_label[j]);
      members.push_back(std::move(orbit));
    }

  const std::size_t vars = members.size();
  const std::size_t rows = s.src_orbits + s.tgt_orbits;
  std::vector<double> a(rows * vars, 0.0), b(rows);
  for (std::size_t o = 0; o < vars; ++o) {
    a[row_of[o] * vars + o] = 1.0;
    a[(s.src_orbits + col_of[o]) * vars + o] = 1.0;
  }
  std::copy(s.src_mass.begin(), s.src_mass.end(), b.begin());
  std::copy(s.tgt_mass.begin(), s.tgt_mass.end(), b.begin() + static_cast<std::ptrdiff_t>(s.src_orbits));
  const lp::LpSolution sol = lp::solve_standard_form(a, rows, vars, b, cbar);
  if (sol.status != lp::LpStatus::optimal) throw SolverError("solve_invariant_ot: orbit LP not solved");

  std::vector<double> w(m * n, 0.0);
  for (std::size_t o = 0; o < vars; ++o) {
    const double u = std::max(sol.x[o], 0.0);
    for (std::size_t k : members[o]) w[k] = u / static_cast<double>(members[o].size());
  }
  InvariantOtResult r;
  r.plan = Coupling(s.source, s.target, std::move(w), 1e-9);
  r.value = 0.0;
  for (std::size_t o = 0; o < vars; ++o) r.value += std::max(sol.x[o], 0.0) * cbar[o];
  r.source_orbits = s.src_orbits;
  r.target_orbits = s.tgt_orbits;
  r.pair_orbits = vars;
  r.iterations = sol.iterations;
  return r;
}

InvariantDual invariant_duality_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroupAction& g,
                                      const CostSpec& cost) {
  const OrbitStructure s = orbit_structure(mu, nu, g, "invariant_duality_value");
  const std::size_t m = s.source.size(), n = s.target.size(), order = g.order();

  // Haar projection of the cost: direct group sum at every support pair
  std::vector<double> cbar(m * n);
  std::vector<double> gx(g.dim()), gy(g.dim());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t e = 0; e < order; ++e) {
        g.apply(e, s.source.point(i), gx);
        g.apply(e, s.target.point(j), gy);
        acc += cost(gx, gy);
      }
      cbar[i * n + j] = acc / static_cast<double>(order);
    }

  // invariant potentials are functions of the orbit: the constraint set is
  // u_R + v_S <= min over pairs in R x S of c̄
  const std::size_t R = s.src_orbits, S = s.tgt_orbits;
  std::vector<double> agg(R * S, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double& c = agg[s.src_label[i] * S + s.tgt_label[j]];
      c = std::min(c, cbar[i * n + j]);
    }

  std::vector<double> u(R, 0.0), v(S, 0.0);
  if (R == 1) {
    for (std::size_t t = 0; t < S; ++t) v[t] = agg[t];
  } else if (S == 1) {
    for (std::size_t r = 0; r < R; ++r) u[r] = agg[r];
  } else {
    const lp::TransportSolution t = lp::solve_transport(s.src_mass, s.tgt_mass, agg);
    u = t.u;
    v = t.v;
  }

  InvariantDual out;
  out.potentials.phi.resize(m);
  out.potentials.psi.resize(n);
  for (std::size_t i = 0; i < m; ++i) out.potentials.phi[i] = u[s.src_label[i]];
  for (std::size_t j = 0; j < n; ++j) out.potentials.psi[j] = v[s.tgt_label[j]];
  out.value = out.potentials.value(s.source, s.target);
  out.max_violation = out.potentials.max_violation(cbar);
  for (std::size_t e = 0; e < order && out.invariant; ++e) {
    for (std::size_t i = 0; i < m; ++i)
      if (out.potentials.phi[s.src_images[e * m + i]] != out.potentials.phi[i]) out.invariant = false;
    for (std::size_t j = 0; j < n; ++j)
      if (out.potentials.psi[s.tgt_images[e * n + j]] != out.potentials.psi[j]) out.invariant = false;
  }
  out.source = s.source;
  out.target = s.target;
  return out;
}

// ---------------------------------------------------------------------------
// transitive identity and the no-map example

TransitiveIdentityReport transitive_identity_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                                   const GroupAction& g) {
  if (!g.transitive())
    throw HypothesisError("transitivity", "the cost identity needs a transitive group action");
  TransitiveIdentityReport r;
  const DiscreteMeasure a = mu.merged(), b = nu.merged();
  const OtResult full = solve_discrete_ot(a, b, CostSpec::quadratic());
  const InvariantOtResult inv = solve_invariant_ot(a, b, g, CostSpec::single_coordinate(0));
  r.full_value = full.value;
  r.invariant_value = inv.value;
  r.scaled_invariant = static_cast<double>(g.dim()) * inv.value;
  r.abs_difference = std::abs(r.full_value - r.scaled_invariant);
  r.rel_difference = r.abs_difference / (1.0 + std::abs(r.full_value));

  const Coupling sym = symmetrize_coupling(full.plan, g);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < g.dim(); ++k) {
    const double c = sym.cost(CostSpec::single_coordinate(k));
    r.coordinate_costs.push_back(c);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  r.coordinate_spread = hi - lo;
  return r;
}

DiscreteMeasure product_power(const DiscreteMeasure& m, std::size_t d) {
  if (m.dim() != 1) throw std::invalid_argument("product_power: factor must be one-dimensional");
  if (d == 0) throw std::invalid_argument("product_power: d must be positive");
  const std::size_t k = m.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (total > 1'000'000 / k) throw std::invalid_argument("product_power: product support too large");
    total *= k;
  }
  std::vector<double> coords(total * d), weights(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    double w = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t a = rest % k;
      rest /= k;
      coords[idx * d + i] = m.point(a)[0];
      w *= m.weight(a);
    }
    weights[idx] = w;
  }
  return DiscreteMeasure(d, std::move(coords), std::move(weights));
}

NoMapReport no_map_counterexample(const DiscreteMeasure& a, const DiscreteMeasure& b, std::size_t d,
                                  const GroupAction& g, double tol) {
  if (g.dim() != d) throw std::invalid_argument("no_map_counterexample: group dimension must equal d");
  NoMapReport r;
  const DiscreteMeasure am = a.merged(), bm = b.merged();
  r.identical_components = am.coords() == bm.coords() && am.weights() == bm.weights();
  // the product weights are symmetric up to rounding; averaging makes them exact
  r.source = symmetrize_measure(product_power(am, d), g);
  r.target = symmetrize_measure(product_power(am, d).mix(product_power(bm, d), 0.5), g);
  r.solution = solve_invariant_ot(r.source, r.target, g, CostSpec::single_coordinate(0));
  r.concentration = graph_concentration(r.solution.plan, tol);
  return r;
}

}  // namespace seqot
