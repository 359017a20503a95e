#include "seqot/ot.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "seqot/error.hpp"
#include "seqot/lp.hpp"

namespace seqot {

// ---------------------------------------------------------------------------
// costs

double CostSpec::operator()(std::span<const double> x, std::span<const double> y) const {
  if (custom) return custom(x, y);
  if (kind == CostKind::squared_coordinate) {
    const double d = x[coordinate] - y[coordinate];
    return d * d;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return s;
}

std::string CostSpec::name() const {
  if (custom) return "custom";
  if (kind == CostKind::squared_coordinate) return "squared_coordinate[" + std::to_string(coordinate) + "]";
  return "squared_euclidean";
}

std::vector<double> cost_table(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost,
                               Backend backend) {
  std::vector<double> c(mu.size() * nu.size());
  if (cost.is_custom()) {
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < nu.size(); ++j) c[i * nu.size() + j] = cost(mu.point(i), nu.point(j));
    return c;
  }
  if (mu.dim() != nu.dim()) throw std::invalid_argument("cost_table: dimension mismatch");
  if (cost.kind == CostKind::squared_coordinate && cost.coordinate >= mu.dim())
    throw std::invalid_argument("cost_table: coordinate out of range");
  kernels::CostArgs args{mu.coords(), nu.coords(), mu.dim(), cost.kind, cost.coordinate};
  kernels::cost_matrix(backend, args, c);
  return c;
}

// ---------------------------------------------------------------------------
// Coupling

Coupling::Coupling(DiscreteMeasure source, DiscreteMeasure target, std::vector<double> weights,
                   double marginal_tol)
    : source_(std::move(source)), target_(std::move(target)), weights_(std::move(weights)) {
  if (weights_.size() != rows() * cols()) throw std::invalid_argument("Coupling: weight table size mismatch");
  for (double w : weights_)
    if (!(w >= 0.0)) throw std::invalid_argument("Coupling: negative weight");
  if (marginal_error() > marginal_tol) throw std::invalid_argument("Coupling: marginals violated");
}

Coupling Coupling::product(DiscreteMeasure source, DiscreteMeasure target) {
  std::vector<double> w(source.size() * target.size());
  for (std::size_t i = 0; i < source.size(); ++i)
    for (std::size_t j = 0; j < target.size(); ++j) w[i * target.size() + j] = source.weight(i) * target.weight(j);
  return Coupling(std::move(source), std::move(target), std::move(w));
}

double Coupling::cost(const CostSpec& c) const {
  double s = 0.0;
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) {
      const double w = weights_[i * cols() + j];
      if (w != 0.0) s += w * c(source_.point(i), target_.point(j));
    }
  return s;
}

double Coupling::total_mass() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

double Coupling::marginal_error() const {
  double err = 0.0;
  std::vector<double> col(cols(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < cols(); ++j) {
      r += weights_[i * cols() + j];
      col[j] += weights_[i * cols() + j];
    }
    err = std::max(err, std::abs(r - source_.weight(i)));
  }
  for (std::size_t j = 0; j < cols(); ++j) err = std::max(err, std::abs(col[j] - target_.weight(j)));
  return err;
}

// ---------------------------------------------------------------------------
// duals

double DualPair::value(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += phi[i] * mu.weight(i);
  for (std::size_t j = 0; j < nu.size(); ++j) s += psi[j] * nu.weight(j);
  return s;
}

double DualPair::max_violation(std::span<const double> cost) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < phi.size(); ++i)
    for (std::size_t j = 0; j < psi.size(); ++j)
      worst = std::max(worst, phi[i] + psi[j] - cost[i * psi.size() + j]);
  return worst;
}

DualPair to_inner_product_form(const DualPair& d, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  DualPair out;
  out.phi.resize(d.phi.size());
  out.psi.resize(d.psi.size());
  auto sq = [](std::span<const double> p) {
    double s = 0.0;
    for (double v : p) s += v * v;
    return s;
  };
  for (std::size_t i = 0; i < mu.size(); ++i) out.phi[i] = 0.5 * (sq(mu.point(i)) - d.phi[i]);
  for (std::size_t j = 0; j < nu.size(); ++j) out.psi[j] = 0.5 * (sq(nu.point(j)) - d.psi[j]);
  return out;
}

// ---------------------------------------------------------------------------
// exact solver

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

lp::TransportSolution solve_dense(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<double>& c) {
  const std::size_t m = a.size(), n = b.size();
  const std::size_t rows = m + n, cols = m * n;
  std::vector<double> mat(rows * cols, 0.0), rhs(rows);
  for (std::size_t i = 0; i < m; ++i) {
    rhs[i] = a[i];
    for (std::size_t j = 0; j < n; ++j) mat[i * cols + i * n + j] = 1.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    rhs[m + j] = b[j];
    for (std::size_t i = 0; i < m; ++i) mat[(m + j) * cols + i * n + j] = 1.0;
  }
  const lp::LpSolution s = lp::solve_standard_form(mat, rows, cols, rhs, c);
  if (s.status != lp::LpStatus::optimal) throw SolverError("dense simplex: transport LP not solved");
  lp::TransportSolution out;
  out.flow = s.x;
  out.u.assign(s.duals.begin(), s.duals.begin() + static_cast<std::ptrdiff_t>(m));
  out.v.assign(s.duals.begin() + static_cast<std::ptrdiff_t>(m), s.duals.end());
  out.value = s.value;
  out.iterations = s.iterations;
  return out;
}

}  // namespace

OtResult solve_discrete_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost,
                           const OtOptions& options) {
  if (mu.empty() || nu.empty()) throw std::invalid_argument("solve_discrete_ot: empty support");
  if (mu.size() > options.max_atoms || nu.size() > options.max_atoms)
    throw SolverError("solve_discrete_ot: instance over size limit (" + std::to_string(mu.size()) + " x " +
                      std::to_string(nu.size()) + ", limit " + std::to_string(options.max_atoms) + ")");
  const auto t0 = Clock::now();
  const std::vector<double> c = cost_table(mu, nu, cost, options.backend);
  const std::size_t m = mu.size(), n = nu.size();

  lp::TransportSolution sol;
  if (m == 1 || n == 1) {
    // forced product plan; the dual puts the whole cost on the larger side
    sol.flow.resize(m * n);
    sol.u.assign(m, 0.0);
    sol.v.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        sol.flow[i * n + j] = mu.weight(i) * nu.weight(j);
        sol.value += sol.flow[i * n + j] * c[i * n + j];
      }
    if (m == 1)
      for (std::size_t j = 0; j < n; ++j) sol.v[j] = c[j];
    else
      for (std::size_t i = 0; i < m; ++i) sol.u[i] = c[i];
  } else if (options.method == OtMethod::network_simplex) {
    sol = lp::solve_transport(mu.weights(), nu.weights(), c);
  } else {
    sol = solve_dense(mu.weights(), nu.weights(), c);
  }

  OtResult r;
  r.duals.phi = std::move(sol.u);
  r.duals.psi = std::move(sol.v);
  r.plan = Coupling(mu, nu, std::move(sol.flow));
  r.value = 0.0;
  for (std::size_t k = 0; k < m * n; ++k) r.value += r.plan.weights()[k] * c[k];
  r.dual_value = r.duals.value(mu, nu);
  r.gap = r.value - r.dual_value;
  r.dual_violation = std::max(0.0, r.duals.max_violation(c));
  r.iterations = sol.iterations;
  r.wall_seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------
// one-dimensional transport

double Transport1D::operator()(double x) const {
  const auto& s = source_values;
  const auto& t = target_values;
  const std::size_t n = s.size();
  auto lo = std::lower_bound(s.begin(), s.end(), x);
  auto hi = std::upper_bound(s.begin(), s.end(), x);
  if (lo != hi) {
    // x is an atom of the source: mass-weighted mean of its images
    double mass = 0.0, acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const auto k = static_cast<std::size_t>(it - s.begin());
      mass += masses[k];
      acc += masses[k] * t[k];
    }
    return acc / mass;
  }
  if (n == 1) return t[0] + (x - s[0]);
  std::size_t j = static_cast<std::size_t>(lo - s.begin());
  if (j == 0) {
    std::size_t k = 1;
    while (k < n && s[k] == s[0]) ++k;
    if (k == n) return t[0];
    return t[0] + (x - s[0]) * (t[k] - t[0]) / (s[k] - s[0]);
  }
  if (j == n) {
    std::size_t k = n - 2;
    while (k > 0 && s[k] == s[n - 1]) --k;
    if (s[k] == s[n - 1]) return t[n - 1];
    return t[n - 1] + (x - s[n - 1]) * (t[n - 1] - t[k]) / (s[n - 1] - s[k]);
  }
  const std::size_t i = j - 1;
  const double w = (x - s[i]) / (s[j] - s[i]);
  return (1.0 - w) * t[i] + w * t[j];
}

Transport1D quantile_transport_1d(const Quantile1D& mu, const Quantile1D& nu, bool resample) {
  Transport1D out;
  if (mu.same_cells(nu)) {
    out.source_values = mu.values;
    out.target_values = nu.values;
    out.masses = mu.masses;
  } else {
    if (!resample) throw std::invalid_argument("quantile_transport_1d: mismatched quantile cells");
    const std::vector<double> ea = mu.cell_edges(), eb = nu.cell_edges();
    std::size_t i = 0, j = 0;
    double prev = 0.0;
    while (i < ea.size() && j < eb.size()) {
      const double next = std::min(ea[i], eb[j]);
      const double mass = next - prev;
      if (mass > 1e-15) {
        out.source_values.push_back(mu.values[i]);
        out.target_values.push_back(nu.values[j]);
        out.masses.push_back(mass);
      }
      prev = next;
      if (ea[i] <= next) ++i;
      if (eb[j] <= next) ++j;
    }
  }
  out.w2sq = 0.0;
  for (std::size_t k = 0; k < out.masses.size(); ++k) {
    const double d = out.target_values[k] - out.source_values[k];
    out.w2sq += out.masses[k] * d * d;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sinkhorn

namespace {

std::vector<double> transpose(const std::vector<double>& c, std::size_t rows, std::size_t cols) {
  std::vector<double> t(c.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = c[i * cols + j];
  return t;
}

}  // namespace

SinkhornResult sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost,
                        const SinkhornOptions& opt) {
  if (!(opt.epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
  const std::size_t m = mu.size(), n = nu.size();
  SinkhornResult res;
  res.epsilon = opt.epsilon;
  if (m == 1 || n == 1) {
    res.plan = Coupling::product(mu, nu);
    res.f.assign(m, 0.0);
    res.g.assign(n, 0.0);
    res.converged = true;
    res.value = res.plan.cost(cost);
    return res;
  }

  const std::vector<double> c = cost_table(mu, nu, cost, opt.backend);
  const std::vector<double> ct = transpose(c, m, n);
  std::vector<double> log_a(m), log_b(n);
  for (std::size_t i = 0; i < m; ++i) log_a[i] = std::log(mu.weight(i));
  for (std::size_t j = 0; j < n; ++j) log_b[j] = std::log(nu.weight(j));

  std::vector<double> f(m, 0.0), g(n, 0.0), offset_row(n), offset_col(m), lse_row(m), lse_col(n);
  const double cmax = *std::max_element(c.begin(), c.end());

  std::vector<double> schedule;
  if (opt.epsilon_scaling) {
    for (double e = std::max(cmax, opt.epsilon); e > opt.epsilon; e *= 0.5) schedule.push_back(e);
  }
  schedule.push_back(opt.epsilon);

  auto col_update = [&](double eps) {
    for (std::size_t i = 0; i < m; ++i) offset_col[i] = f[i] / eps + log_a[i];
    kernels::row_logsumexp(opt.backend, {ct.data(), n, m, offset_col.data(), 1.0 / eps}, lse_col);
    for (std::size_t j = 0; j < n; ++j) g[j] = -eps * lse_col[j];
  };
  auto row_lse = [&](double eps) {
    for (std::size_t j = 0; j < n; ++j) offset_row[j] = g[j] / eps + log_b[j];
    kernels::row_logsumexp(opt.backend, {c.data(), m, n, offset_row.data(), 1.0 / eps}, lse_row);
  };

  std::size_t it = 0;
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    const std::size_t stage_cap = last ? opt.max_iterations : 20;
    row_lse(eps);
    for (std::size_t k = 0; k < stage_cap && it < opt.max_iterations; ++k, ++it) {
      for (std::size_t i = 0; i < m; ++i) f[i] = -eps * lse_row[i];
      col_update(eps);
      row_lse(eps);
      // row marginal of the current plan: a_i * exp(f_i/eps + lse_i)
      double tv = 0.0;
      for (std::size_t i = 0; i < m; ++i) tv += std::abs(std::exp(log_a[i] + f[i] / eps + lse_row[i]) - mu.weight(i));
      res.violation = 0.5 * tv;
      if (res.violation <= (last ? opt.tol : std::max(opt.tol, 1e-4))) {
        ++it;
        break;
      }
    }
  }
  res.iterations = it;
  res.converged = res.violation <= opt.tol;

  const double eps = opt.epsilon;
  std::vector<double> p(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      p[i * n + j] = std::exp(log_a[i] + log_b[j] + (f[i] + g[j] - c[i * n + j]) / eps);
  res.value = 0.0;
  for (std::size_t k = 0; k < m * n; ++k) res.value += p[k] * c[k];
  res.f = std::move(f);
  res.g = std::move(g);
  res.plan = Coupling(mu, nu, std::move(p), std::numeric_limits<double>::infinity());
  return res;
}

EntropicMap::EntropicMap(const SinkhornResult& r)
    : dim_(r.plan.target().dim()), targets_(r.plan.target().coords()), offset_(r.g.size()),
      inv_eps_(1.0 / r.epsilon) {
  for (std::size_t j = 0; j < r.g.size(); ++j)
    offset_[j] = r.g[j] * inv_eps_ + std::log(r.plan.target().weight(j));
}

std::vector<double> EntropicMap::apply(std::span<const double> queries, Backend backend) const {
  if (queries.size() % dim_ != 0) throw std::invalid_argument("EntropicMap: query size not a multiple of dim");
  std::vector<double> out(queries.size());
  kernels::EntropicMapArgs args{queries, targets_, dim_, offset_, inv_eps_};
  kernels::entropic_map(backend, args, out);
  return out;
}

std::vector<double> barycentric_map(const Coupling& plan) {
  const std::size_t d = plan.target().dim();
  std::vector<double> out(plan.rows() * d, 0.0);
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    double mass = 0.0;
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      const double w = plan(i, j);
      if (w == 0.0) continue;
      mass += w;
      auto y = plan.target().point(j);
      for (std::size_t k = 0; k < d; ++k) out[i * d + k] += w * y[k];
    }
    if (!(mass > 0.0)) throw std::invalid_argument("barycentric_map: zero-mass row");
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] /= mass;
  }
  return out;
}

// ---------------------------------------------------------------------------
// cyclical monotonicity

namespace {

struct SupportPair {
  std::size_t i, j;
};

// Splits a closed walk into simple cycles and returns one with negative
// weight.
std::vector<std::size_t> negative_simple_cycle(std::vector<std::size_t> walk,
                                               const std::function<double(std::size_t, std::size_t)>& w) {
  auto weight = [&](const std::vector<std::size_t>& cyc) {
    double s = 0.0;
    for (std::size_t k = 0; k < cyc.size(); ++k) s += w(cyc[k], cyc[(k + 1) % cyc.size()]);
    return s;
  };
  while (true) {
    bool split = false;
    for (std::size_t a = 0; a < walk.size() && !split; ++a)
      for (std::size_t b = a + 1; b < walk.size(); ++b)
        if (walk[a] == walk[b]) {
          std::vector<std::size_t> inner(walk.begin() + static_cast<std::ptrdiff_t>(a),
                                         walk.begin() + static_cast<std::ptrdiff_t>(b));
          std::vector<std::size_t> outer(walk.begin(), walk.begin() + static_cast<std::ptrdiff_t>(a));
          outer.insert(outer.end(), walk.begin() + static_cast<std::ptrdiff_t>(b), walk.end());
          walk = weight(inner) < weight(outer) ? inner : outer;
          split = true;
          break;
        }
    if (!split) return walk;
  }
}

}  // namespace

CycleReport check_cyclical_monotonicity(const Coupling& plan, std::size_t max_length, const CostSpec& cost,
                                        double tol) {
  CycleReport rep;
  rep.max_length = max_length;
  std::vector<SupportPair> sup;
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j)
      if (plan(i, j) > 1e-12) sup.push_back({i, j});
  rep.support_size = sup.size();
  const std::size_t s = sup.size();
  if (s < 2 || max_length < 2) return rep;
  if (max_length > 2 && s > 1500)
    throw std::invalid_argument("check_cyclical_monotonicity: support too large for long cycles");

  std::vector<double> w(s * s);
  double scale = 0.0;
  for (std::size_t k = 0; k < s; ++k) {
    const double own = cost(plan.source().point(sup[k].i), plan.target().point(sup[k].j));
    scale = std::max(scale, std::abs(own));
    for (std::size_t l = 0; l < s; ++l) {
      const double cross = cost(plan.source().point(sup[l].i), plan.target().point(sup[k].j));
      // edge l -> k: x_l takes y_k, which pair k gives up
      w[l * s + k] = cross - cost(plan.source().point(sup[k].i), plan.target().point(sup[k].j));
      scale = std::max(scale, std::abs(cross));
    }
  }
  const double threshold = -tol * (1.0 + scale);
  auto weight = [&](std::size_t a, std::size_t b) { return w[a * s + b]; };

  auto report = [&](std::vector<std::size_t> walk) {
    walk = negative_simple_cycle(std::move(walk), weight);
    rep.pass = false;
    rep.excess = 0.0;
    for (std::size_t k = 0; k < walk.size(); ++k) {
      rep.excess += weight(walk[k], walk[(k + 1) % walk.size()]);
      rep.cycle.emplace_back(sup[walk[k]].i, sup[walk[k]].j);
    }
  };

  if (max_length == 2) {
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = a + 1; b < s; ++b)
        if (weight(a, b) + weight(b, a) < threshold) {
          report({a, b});
          return rep;
        }
    return rep;
  }

  // min-plus powers: best[t][v] = lightest walk of t edges from `start` to v
  std::vector<double> cur(s), nxt(s);
  std::vector<std::size_t> pred(max_length * s);
  for (std::size_t start = 0; start < s; ++start) {
    for (std::size_t v = 0; v < s; ++v) {
      cur[v] = weight(start, v);
      pred[v] = start;
    }
    for (std::size_t t = 2; t <= max_length; ++t) {
      for (std::size_t v = 0; v < s; ++v) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t u = 0; u < s; ++u) {
          const double cand = cur[u] + weight(u, v);
          if (cand < best) {
            best = cand;
            arg = u;
          }
        }
        nxt[v] = best;
        pred[(t - 1) * s + v] = arg;
      }
      std::swap(cur, nxt);
      if (cur[start] < threshold) {
        std::vector<std::size_t> walk;
        std::size_t v = start;
        for (std::size_t step = t; step >= 1; --step) {
          walk.push_back(v);
          v = pred[(step - 1) * s + v];
        }
        std::reverse(walk.begin(), walk.end());
        // walk holds the t vertices after `start`, ending at start: rotate so it
        // reads start -> ... in edge order
        std::rotate(walk.begin(), walk.end() - 1, walk.end());
        report(std::move(walk));
        return rep;
      }
    }
  }
  return rep;
}

double graph_concentration(const Coupling& plan, double tol) {
  std::map<std::vector<double>, std::size_t> group_of;
  std::vector<std::size_t> group(plan.cols());
  for (std::size_t j = 0; j < plan.cols(); ++j) {
    auto p = plan.target().point(j);
    auto [it, inserted] = group_of.emplace(std::vector<double>(p.begin(), p.end()), group_of.size());
    group[j] = it->second;
  }
  std::vector<double> acc(group_of.size());
  double total = 0.0, concentrated = 0.0;
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    double row = 0.0;
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      acc[group[j]] += plan(i, j);
      row += plan(i, j);
    }
    total += row;
    if (row <= 0.0) continue;
    const double top = *std::max_element(acc.begin(), acc.end());
    if (1.0 - top / row <= tol) concentrated += row;
  }
  return total > 0.0 ? concentrated / total : 0.0;
}

}  // namespace seqot
