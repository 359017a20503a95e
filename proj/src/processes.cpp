#include "seqot/processes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <variant>

#include "seqot/error.hpp"
#include "seqot/lp.hpp"
#include "seqot/stats.hpp"

namespace seqot {

// ---------------------------------------------------------------------------
// diagonal maps

DiagonalTransport diagonal_transport(const ProductSpec& p, const ProductSpec& q, std::size_t resolution) {
  if (p.size() != q.size()) throw std::invalid_argument("diagonal_transport: factor counts differ");
  DiagonalTransport d;
  double running = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d.maps.push_back(quantile_transport_1d(to_quantile(p.factors[i], resolution), to_quantile(q.factors[i], resolution)));
    d.w2sq.push_back(d.maps.back().w2sq);
    running += d.w2sq.back();
    d.partial_sums.push_back(running);
  }
  d.total = running;
  return d;
}

// ---------------------------------------------------------------------------
// tilts

bool CylinderTilt::constant() const {
  return amplitude == 0.0 && std::all_of(linear.begin(), linear.end(), [](double a) { return a == 0.0; });
}

double CylinderTilt::operator()(std::span<const double> x) const {
  const std::size_t k = arity();
  if (x.size() < k) throw std::invalid_argument("CylinderTilt: point has fewer coordinates than the tilt");
  double lin = 0.0, prod = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    lin += linear[i] * x[i];
    prod *= x[i];
  }
  return std::exp(lin) * (1.0 + (k ? amplitude * std::tanh(scale * prod) : 0.0));
}

namespace {

/// Largest (-log m)'' of a one-dimensional law (Gaussian or grid).
double max_log_curvature(const Marginal1D& m) {
  if (const auto* g = std::get_if<Gaussian1D>(&m)) return 1.0 / (g->sd * g->sd);
  if (const auto* g = std::get_if<Grid1D>(&m)) {
    const auto& x = g->nodes();
    const auto& f = g->density();
    const double fmax = *std::max_element(f.begin(), f.end());
    double k = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
      if (f[i - 1] < 1e-12 * fmax || f[i] < 1e-12 * fmax || f[i + 1] < 1e-12 * fmax) continue;
      const double h1 = x[i] - x[i - 1], h2 = x[i + 1] - x[i];
      const double a = -std::log(f[i - 1]), b = -std::log(f[i]), c = -std::log(f[i + 1]);
      k = std::max(k, 2.0 * ((c - b) / h2 - (b - a) / h1) / (h1 + h2));
    }
    return k;
  }
  throw HypothesisError("quasi-product 2)", "factor family not recognized (Gaussian or grid density required)");
}

std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t r = 1;
  while (e--) r *= base;
  return r;
}

/// Tilted product on a tensor grid of quantile cells over the first k
/// coordinates; the first coordinate is the most significant digit.
struct TensorGrid {
  std::size_t k = 0;
  std::size_t r = 1;
  std::vector<Quantile1D> cells;  ///< per coordinate
  std::vector<double> mass;       ///< product cell mass per node
  std::vector<double> density;    ///< normalized tilt per node

  std::vector<double> point(std::size_t idx, std::size_t c) const {
    // first c coordinates of node idx of a c-dimensional grid
    std::vector<double> x(c);
    for (std::size_t i = c; i-- > 0;) {
      x[i] = cells[i].values[idx % r];
      idx /= r;
    }
    return x;
  }

  /// Marginal weights on the first c coordinates.
  std::vector<double> marginal(std::size_t c) const {
    const std::size_t block = ipow(r, k - c);
    std::vector<double> w(ipow(r, c), 0.0);
    for (std::size_t idx = 0; idx < mass.size(); ++idx) w[idx / block] += density[idx] * mass[idx];
    return w;
  }

  /// Reference (untilted) mass on the first c coordinates.
  std::vector<double> reference(std::size_t c) const {
    std::vector<double> w(ipow(r, c), 1.0);
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
      std::size_t rest = idx;
      for (std::size_t i = c; i-- > 0;) {
        w[idx] *= cells[i].masses[rest % r];
        rest /= r;
      }
    }
    return w;
  }
};

TensorGrid build_grid(const ProductSpec& ref, const CylinderTilt& tilt, std::size_t k, std::size_t r) {
  TensorGrid t;
  t.k = k;
  t.r = r;
  for (std::size_t i = 0; i < k; ++i) {
    t.cells.push_back(to_quantile(ref.factors[i], r));
    if (t.cells.back().size() != r)
      throw std::invalid_argument("quasi_product_approx: discrete factors need at least as many atoms as cells");
  }
  const std::size_t nodes = ipow(r, k);
  t.mass = t.reference(k);
  t.density.resize(nodes);
  double z = 0.0;
  for (std::size_t idx = 0; idx < nodes; ++idx) {
    const auto x = t.point(idx, k);
    t.density[idx] = tilt(x);
    z += t.density[idx] * t.mass[idx];
  }
  for (double& v : t.density) v /= z;
  return t;
}

/// Smallest eigenvalue of the Hessian of -log(g(x) prod q_i(x_i)) over the
/// nodes of the Q grid, with the factor curvatures taken at their minima.
double target_log_concavity(const TensorGrid& qgrid, const CylinderTilt& g, const std::vector<double>& factor_k) {
  const std::size_t kg = g.arity();
  double K = *std::min_element(factor_k.begin(), factor_k.end());
  if (kg == 0 || g.constant()) return K;
  const std::size_t nodes = ipow(qgrid.r, kg);
  const double h = 1e-4;
  auto neglog = [&](std::vector<double> x) { return -std::log(g(x)); };
  for (std::size_t idx = 0; idx < nodes; ++idx) {
    const std::vector<double> x = qgrid.point(idx, kg);
    Eigen::MatrixXd H(static_cast<Eigen::Index>(kg), static_cast<Eigen::Index>(kg));
    const double f0 = neglog(x);
    for (std::size_t a = 0; a < kg; ++a)
      for (std::size_t b = a; b < kg; ++b) {
        double v;
        if (a == b) {
          auto xp = x, xm = x;
          xp[a] += h;
          xm[a] -= h;
          v = (neglog(xp) - 2.0 * f0 + neglog(xm)) / (h * h);
        } else {
          auto pp = x, pm = x, mp = x, mm = x;
          pp[a] += h, pp[b] += h;
          pm[a] += h, pm[b] -= h;
          mp[a] -= h, mp[b] += h;
          mm[a] -= h, mm[b] -= h;
          v = (neglog(pp) - neglog(pm) - neglog(mp) + neglog(mm)) / (4 * h * h);
        }
        H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
        H(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
      }
    for (std::size_t a = 0; a < kg; ++a) H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += factor_k[a];
    K = std::min(K, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff());
  }
  return K;
}

struct LevelSolution {
  std::size_t c = 0;
  std::vector<double> weights;  ///< mu_c per node
  std::vector<double> f;        ///< f_c per node
  std::vector<double> map;      ///< barycentric T_c per node, c per node
};

}  // namespace

QuasiProductReport quasi_product_approx(const QuasiProductSpec& spec, const QuasiProductOptions& options) {
  if (options.n_list.empty()) throw std::invalid_argument("quasi_product_approx: empty n_list");
  std::vector<std::size_t> ns = options.n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.front() == 0) throw std::invalid_argument("quasi_product_approx: dimensions must be >= 1");
  const std::size_t kf = spec.f.arity(), kg = spec.g.arity();
  const std::size_t kstar = std::max(kf, kg);
  const std::size_t need = std::max(ns.back(), kstar);
  if (spec.p.size() < need || spec.q.size() < need)
    throw std::invalid_argument("quasi_product_approx: products need " + std::to_string(need) + " factors");
  if (std::abs(spec.f.amplitude) >= 1.0 || std::abs(spec.g.amplitude) >= 1.0)
    throw std::invalid_argument("quasi_product_approx: tilt amplitude must lie in (-1, 1)");

  QuasiProductReport rep;

  // 1) uniform log-concavity of the target factors (and of nu on the core box below)
  std::vector<double> kq(need);
  for (std::size_t i = 0; i < need; ++i) {
    try {
      kq[i] = certified_log_concavity(spec.q.factors[i]);
    } catch (const HypothesisError& e) {
      throw HypothesisError("quasi-product 1)", e.what());
    }
    if (!(kq[i] > 0.0)) throw HypothesisError("quasi-product 1)", "factor " + std::to_string(i + 1) + " of Q is not uniformly log-concave");
  }
  // 2) contraction of the inverse diagonal maps via Caffarelli
  rep.contraction = 0.0;
  for (std::size_t i = 0; i < need; ++i) {
    double c0;
    try {
      c0 = certified_log_concavity(spec.p.factors[i]);
    } catch (const HypothesisError& e) {
      throw HypothesisError("quasi-product 2)", e.what());
    }
    const double c1 = max_log_curvature(spec.q.factors[i]);
    if (!(c0 > 0.0) || !std::isfinite(c1))
      throw HypothesisError("quasi-product 2)", "no Caffarelli bound for coordinate " + std::to_string(i + 1));
    rep.contraction = std::max(rep.contraction, std::sqrt(std::max(c1, 0.0) / c0));
  }

  std::size_t r = 1;
  if (kstar > 0) {
    r = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(options.max_core_nodes), 1.0 / static_cast<double>(kstar)) + 1e-9));
    r = std::max<std::size_t>(r, 2);
  }
  rep.resolution = r;
  const TensorGrid pg = build_grid(spec.p, spec.f, kstar, r);
  const TensorGrid qg = build_grid(spec.q, spec.g, kstar, r);

  // 3) bounds on g, 4) integrability of f log f
  rep.g_min = *std::min_element(qg.density.begin(), qg.density.end());
  rep.g_max = *std::max_element(qg.density.begin(), qg.density.end());
  if (!(rep.g_min > 0.0) || !std::isfinite(rep.g_max))
    throw HypothesisError("quasi-product 3)", "g is not bounded away from 0 and infinity on the discretization");
  rep.f_log_f = 0.0;
  for (std::size_t idx = 0; idx < pg.mass.size(); ++idx)
    if (pg.density[idx] > 0.0) rep.f_log_f += pg.mass[idx] * pg.density[idx] * std::log(pg.density[idx]);
  if (!std::isfinite(rep.f_log_f)) throw HypothesisError("quasi-product 4)", "f log f is not integrable");

  rep.K = target_log_concavity(qg, spec.g, std::vector<double>(kq.begin(), kq.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(kstar, 1))));
  rep.K = std::min(rep.K, *std::min_element(kq.begin(), kq.end()));
  if (!(rep.K > 0.0)) throw HypothesisError("quasi-product 1)", "nu is not uniformly log-concave on the discretization box");

  // coordinatewise monotone maps on the cells
  std::vector<Transport1D> diag;
  for (std::size_t i = 0; i < kstar; ++i) diag.push_back(quantile_transport_1d(pg.cells[i], qg.cells[i]));

  std::map<std::size_t, LevelSolution> levels;
  double previous_entropy = -std::numeric_limits<double>::infinity();
  for (std::size_t n : ns) {
    const std::size_t c = std::min(n, kstar);
    QuasiProductLevel lvl;
    lvl.n = n;
    lvl.core = c;
    LevelSolution sol;
    sol.c = c;
    if (c == 0) {
      lvl.nodes = 1;
      sol.weights = {1.0};
      sol.f = {1.0};
    } else {
      const std::vector<double> mw = pg.marginal(c), nw = qg.marginal(c);
      const std::vector<double> pref = pg.reference(c);
      std::vector<double> mc, nc;
      for (std::size_t idx = 0; idx < mw.size(); ++idx) {
        const auto x = pg.point(idx, c);
        mc.insert(mc.end(), x.begin(), x.end());
        const auto y = qg.point(idx, c);
        nc.insert(nc.end(), y.begin(), y.end());
      }
      const DiscreteMeasure mu(c, mc, mw), nu(c, nc, nw);
      if (mu.size() != mw.size() || nu.size() != nw.size())
        throw SolverError("quasi_product_approx: discretization produced negligible atoms");
      OtOptions opt;
      opt.max_atoms = std::max<std::size_t>(opt.max_atoms, mw.size());
      const OtResult ot = solve_discrete_ot(mu, nu, CostSpec::quadratic(), opt);
      sol.weights = mu.weights();
      sol.map = barycentric_map(ot.plan);
      sol.f.resize(mw.size());
      for (std::size_t idx = 0; idx < mw.size(); ++idx) sol.f[idx] = mw[idx] / pref[idx];
      lvl.nodes = mw.size();
      lvl.value = ot.value;
      for (std::size_t idx = 0; idx < mw.size(); ++idx) {
        const auto x = pg.point(idx, c);
        double gap = 0.0;
        for (std::size_t i = 0; i < c; ++i) {
          const double d = sol.map[idx * c + i] - diag[i](x[i]);
          gap += d * d;
        }
        lvl.diagonal_gap += sol.weights[idx] * gap;
        lvl.f_entropy += sol.weights[idx] * std::log(sol.f[idx]);
      }
    }
    if (lvl.f_entropy < previous_entropy - 1e-12 || lvl.f_entropy > rep.f_log_f + 1e-12) rep.jensen_monotone = false;
    previous_entropy = lvl.f_entropy;
    rep.levels.push_back(lvl);
    levels.emplace(n, std::move(sol));
  }

  for (std::size_t b = 0; b < ns.size(); ++b)
    for (std::size_t a = 0; a < b; ++a) {
      const LevelSolution& hi = levels.at(ns[b]);
      const LevelSolution& lo = levels.at(ns[a]);
      QuasiProductPair pr;
      pr.m = ns[a];
      pr.n = ns[b];
      const std::size_t block = ipow(r, hi.c - lo.c);
      for (std::size_t idx = 0; idx < hi.weights.size(); ++idx) {
        const std::size_t low = idx / block;
        double d = 0.0;
        if (hi.c > 0) {
          const auto x = pg.point(idx, hi.c);
          for (std::size_t i = 0; i < hi.c; ++i) {
            const double tm = i < lo.c ? lo.map[low * lo.c + i] : diag[i](x[i]);
            const double diff = hi.map[idx * hi.c + i] - tm;
            d += diff * diff;
          }
        }
        pr.D += hi.weights[idx] * d;
        pr.entropy += hi.weights[idx] * std::log(hi.f[idx] / lo.f[low]);
      }
      pr.asserted = pr.m >= kg;
      if (pr.asserted) {
        pr.bound = 2.0 / rep.K * pr.entropy;
        pr.pass = pr.D <= pr.bound * (1.0 + options.tolerance) + 1e-14;
      } else {
        pr.bound = std::numeric_limits<double>::quiet_NaN();
      }
      rep.pass = rep.pass && pr.pass;
      rep.pairs.push_back(pr);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// mixtures

void MixtureSpec::validate() const {
  if (weights.empty()) throw std::invalid_argument("mixture: no components");
  if (weights.size() != components.size()) throw std::invalid_argument("mixture: weights and components differ in length");
  if (!labels.empty() && labels.size() != weights.size()) throw std::invalid_argument("mixture: label count differs");
  double s = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture: weights must be positive");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("mixture: weights must sum to 1");
}

namespace {

std::string hex(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::uint64_t hash_doubles(std::uint64_t h, const std::vector<double>& v) {
  for (double x : v) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    h = stats::splitmix64(h ^ bits);
  }
  return h;
}

struct W2Cache {
  std::mutex lock;
  std::map<std::string, Quantile1D> quantiles;
  std::map<std::string, double> costs;
};

W2Cache& cache() {
  static W2Cache c;
  return c;
}

const Quantile1D& cached_quantile(const Marginal1D& m, const std::string& key, std::size_t resolution) {
  W2Cache& c = cache();
  const std::string k = key + "@" + std::to_string(resolution);
  {
    std::lock_guard<std::mutex> g(c.lock);
    auto it = c.quantiles.find(k);
    if (it != c.quantiles.end()) return it->second;
  }
  Quantile1D q = to_quantile(m, resolution);
  std::lock_guard<std::mutex> g(c.lock);
  return c.quantiles.emplace(k, std::move(q)).first->second;
}

}  // namespace

std::string marginal_key(const Marginal1D& m) {
  if (const auto* g = std::get_if<Gaussian1D>(&m)) return "N(" + hex(g->mean) + "," + hex(g->sd) + ")";
  if (const auto* g = std::get_if<Grid1D>(&m))
    return "G" + std::to_string(g->size()) + ":" + std::to_string(hash_doubles(hash_doubles(1, g->nodes()), g->density()));
  const auto& d = std::get<DiscreteMeasure>(m);
  return "D" + std::to_string(d.size()) + ":" + std::to_string(hash_doubles(hash_doubles(2, d.coords()), d.weights()));
}

double cached_w2sq(const Marginal1D& a, const Marginal1D& b, std::size_t resolution) {
  const std::string ka = marginal_key(a), kb = marginal_key(b);
  const std::string key = ka + "|" + kb + "@" + std::to_string(resolution);
  W2Cache& c = cache();
  {
    std::lock_guard<std::mutex> g(c.lock);
    auto it = c.costs.find(key);
    if (it != c.costs.end()) return it->second;
  }
  const double v = quantile_transport_1d(cached_quantile(a, ka, resolution), cached_quantile(b, kb, resolution)).w2sq;
  std::lock_guard<std::mutex> g(c.lock);
  c.costs.emplace(key, v);
  return v;
}

void clear_w2_cache() {
  std::lock_guard<std::mutex> g(cache().lock);
  cache().quantiles.clear();
  cache().costs.clear();
}

std::size_t w2_cache_size() {
  std::lock_guard<std::mutex> g(cache().lock);
  return cache().costs.size();
}

DeFinettiResult definetti_ot(const MixtureSpec& mu, const MixtureSpec& nu, std::size_t resolution) {
  mu.validate();
  nu.validate();
  const std::size_t K = mu.size(), L = nu.size();
  DeFinettiResult r;
  r.ground_cost.resize(K * L);
  // tabulate quantiles serially so the parallel loop only reads the cache
  for (const auto& m : mu.components) cached_quantile(m, marginal_key(m), resolution);
  for (const auto& p : nu.components) cached_quantile(p, marginal_key(p), resolution);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(K * L); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    r.ground_cost[kk] = cached_w2sq(mu.components[kk / L], nu.components[kk % L], resolution);
  }
  std::vector<double> idx_mu(K), idx_nu(L);
  std::iota(idx_mu.begin(), idx_mu.end(), 0.0);
  std::iota(idx_nu.begin(), idx_nu.end(), 0.0);
  const DiscreteMeasure a(1, idx_mu, mu.weights), b(1, idx_nu, nu.weights);
  std::vector<double> flow;
  if (K == 1 || L == 1) {
    flow.resize(K * L);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < L; ++j) flow[i * L + j] = a.weight(i) * b.weight(j);
  } else {
    flow = lp::solve_transport(a.weights(), b.weights(), r.ground_cost).flow;
  }
  r.outer = Coupling(a, b, flow);
  r.value = 0.0;
  for (std::size_t k = 0; k < K * L; ++k) r.value += flow[k] * r.ground_cost[k];
  r.concentration = graph_concentration(r.outer, 1e-9);
  r.is_map = r.concentration >= 1.0 - 1e-12;
  if (r.is_map) {
    for (std::size_t i = 0; i < K; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < L; ++j)
        if (flow[i * L + j] > flow[i * L + best]) best = j;
      r.assignment.push_back(best);
      r.component_maps.push_back(
          quantile_transport_1d(cached_quantile(mu.components[i], marginal_key(mu.components[i]), resolution),
                                cached_quantile(nu.components[best], marginal_key(nu.components[best]), resolution)));
    }
  }
  return r;
}

bool known_test_function(const std::string& name) {
  static const char* names[] = {"x", "x2", "x3", "abs", "tanh", "sin", "cos", "atan", "gauss"};
  return std::any_of(std::begin(names), std::end(names), [&](const char* n) { return name == n; });
}

double test_function(const std::string& name, double x) {
  if (name == "x") return x;
  if (name == "x2") return x * x;
  if (name == "x3") return x * x * x;
  if (name == "abs") return std::abs(x);
  if (name == "tanh") return std::tanh(x);
  if (name == "sin") return std::sin(x);
  if (name == "cos") return std::cos(x);
  if (name == "atan") return std::atan(x);
  if (name == "gauss") return std::exp(-x * x);
  throw std::invalid_argument("unknown test function '" + name + "'");
}

double component_moment(const Marginal1D& m, const std::string& name) {
  if (!known_test_function(name)) throw std::invalid_argument("unknown test function '" + name + "'");
  if (const auto* g = std::get_if<Gaussian1D>(&m)) {
    if (name == "x") return g->mean;
    if (name == "x2") return g->mean * g->mean + g->sd * g->sd;
    const Grid1D grid = gaussian_grid(*g, g->mean - 12.0 * g->sd, g->mean + 12.0 * g->sd, 24001);
    return grid.expectation([&](double x) { return test_function(name, x); });
  }
  if (const auto* g = std::get_if<Grid1D>(&m)) return g->expectation([&](double x) { return test_function(name, x); });
  const auto& d = std::get<DiscreteMeasure>(m);
  double s = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) s += d.weight(k) * test_function(name, d.point(k)[0]);
  return s;
}

Classification classify_component(std::span<const double> path, const MixtureSpec& mixture,
                                  const std::vector<std::string>& test_functions) {
  mixture.validate();
  if (path.empty()) throw std::invalid_argument("classify_component: empty path");
  if (test_functions.empty()) throw std::invalid_argument("classify_component: no test functions");
  Classification c;
  for (const auto& f : test_functions) {
    if (!known_test_function(f)) throw std::invalid_argument("unknown test function '" + f + "'");
    double s = 0.0;
    for (double x : path) s += test_function(f, x);
    c.empirical.push_back(s / static_cast<double>(path.size()));
  }
  for (const auto& comp : mixture.components) {
    double d2 = 0.0;
    for (std::size_t t = 0; t < test_functions.size(); ++t) {
      const double d = c.empirical[t] - component_moment(comp, test_functions[t]);
      d2 += d * d;
    }
    c.distances.push_back(std::sqrt(d2));
  }
  std::vector<std::size_t> order(c.distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.distances[a] < c.distances[b]; });
  c.component = order[0];
  if (order.size() > 1) {
    c.margin = c.distances[order[1]] - c.distances[order[0]];
    c.ambiguous = c.margin <= 1e-12;
  }
  return c;
}

double marginal_density(const Marginal1D& m, double x) {
  if (const auto* g = std::get_if<Gaussian1D>(&m)) return normal_pdf((x - g->mean) / g->sd) / g->sd;
  if (const auto* g = std::get_if<Grid1D>(&m)) return g->density_at(x);
  throw std::invalid_argument("density requested for a discrete law");
}

namespace {

/// Sampler and log-density of one mixture component.
class ComponentLaw {
 public:
  explicit ComponentLaw(const Marginal1D& m) : law_(m) {
    if (std::holds_alternative<DiscreteMeasure>(m))
      throw std::invalid_argument("mixture entropy: components need densities");
    if (const auto* g = std::get_if<Grid1D>(&m)) cdf_.emplace_back(*g);
  }

  template <class Rng>
  double draw(Rng& rng) const {
    if (const auto* g = std::get_if<Gaussian1D>(&law_)) return g->mean + g->sd * std::normal_distribution<double>()(rng);
    return cdf_.front().inverse(std::uniform_real_distribution<double>()(rng));
  }

  double log_density(double x) const {
    if (const auto* g = std::get_if<Gaussian1D>(&law_)) {
      const double z = (x - g->mean) / g->sd;
      return -0.5 * z * z - std::log(g->sd) - 0.5 * std::log(2.0 * M_PI);
    }
    const double f = std::get<Grid1D>(law_).density_at(x);
    return f > 0.0 ? std::log(f) : -std::numeric_limits<double>::infinity();
  }

 private:
  Marginal1D law_;
  std::vector<GridCdf> cdf_;
};

double log_sum_exp(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

MixtureEntropyReport mixture_entropy_bound_check(const MixtureSpec& mixture, std::size_t m, std::size_t n,
                                                 std::size_t samples, std::uint64_t seed) {
  mixture.validate();
  if (!(m >= 1 && m < n)) throw std::invalid_argument("mixture_entropy_bound_check: need 1 <= m < n");
  if (samples == 0) throw std::invalid_argument("mixture_entropy_bound_check: no samples");
  std::vector<ComponentLaw> laws;
  for (const auto& c : mixture.components) laws.emplace_back(c);
  const std::size_t K = mixture.size();
  std::vector<double> log_w(K);
  for (std::size_t i = 0; i < K; ++i) log_w[i] = std::log(mixture.weights[i]);

  constexpr std::size_t chunk = 4096;
  const std::size_t chunks = (samples + chunk - 1) / chunk;
  std::vector<double> values(samples, 0.0);
  std::vector<char> valid(samples, 1);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cidx = 0; cidx < static_cast<std::ptrdiff_t>(chunks); ++cidx) {
    std::mt19937_64 rng(stats::substream_seed(seed, static_cast<std::uint64_t>(cidx)));
    std::discrete_distribution<std::size_t> pick(mixture.weights.begin(), mixture.weights.end());
    std::vector<double> x(n), a(K), b(K), ab(K), la(K), lb(K);
    const std::size_t lo = static_cast<std::size_t>(cidx) * chunk, hi = std::min(samples, lo + chunk);
    for (std::size_t s = lo; s < hi; ++s) {
      const std::size_t comp = pick(rng);
      for (auto& v : x) v = laws[comp].draw(rng);
      for (std::size_t i = 0; i < K; ++i) {
        double pa = 0.0, pb = 0.0;
        for (std::size_t k = 0; k < m; ++k) pa += laws[i].log_density(x[k]);
        for (std::size_t k = m; k < n; ++k) pb += laws[i].log_density(x[k]);
        la[i] = log_w[i] + pa;
        lb[i] = log_w[i] + pb;
        ab[i] = log_w[i] + pa + pb;
      }
      const double num = log_sum_exp(ab), da = log_sum_exp(la), db = log_sum_exp(lb);
      if (!std::isfinite(num) || !std::isfinite(da) || !std::isfinite(db)) {
        valid[s] = 0;
        continue;
      }
      values[s] = num - da - db;
    }
  }
  std::vector<double> kept;
  kept.reserve(samples);
  MixtureEntropyReport rep;
  for (std::size_t s = 0; s < samples; ++s) {
    if (valid[s])
      kept.push_back(values[s]);
    else
      ++rep.skipped;
  }
  if (kept.empty()) throw std::runtime_error("mixture_entropy_bound_check: every sample hit a vanishing density");
  const stats::MeanEstimate est = stats::mean_iid(kept);
  rep.estimate.value = est.mean;
  rep.estimate.standard_error = est.standard_error;
  rep.estimate.method = EntropyMethod::monte_carlo;
  rep.estimate.samples = kept.size();
  rep.bound = -std::log(*std::min_element(mixture.weights.begin(), mixture.weights.end()));
  rep.m = m;
  rep.n = n;
  rep.pass = rep.estimate.value <= rep.bound + 3.0 * rep.estimate.standard_error;
  return rep;
}

}  // namespace seqot
