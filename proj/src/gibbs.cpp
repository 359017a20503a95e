#include "seqot/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "seqot/error.hpp"

namespace seqot {

// ---------------------------------------------------------------------------
// potentials

double Polynomial1::operator()(double x) const {
  double v = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
  return v;
}

double Polynomial1::derivative(double x) const {
  double v = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 1;) v = v * x + static_cast<double>(k) * coeffs[k];
  return v;
}

Polynomial2 Polynomial2::zero() { return Polynomial2{0, {0.0}}; }

Polynomial2 Polynomial2::bilinear(double c) { return Polynomial2{1, {0.0, 0.0, 0.0, c}}; }

namespace {

void check_shape(const Polynomial2& w) {
  if (w.coeffs.size() != (w.degree + 1) * (w.degree + 1))
    throw std::invalid_argument("Polynomial2: expected (degree + 1)^2 coefficients");
}

std::vector<double> powers(double x, std::size_t d) {
  std::vector<double> p(d + 1, 1.0);
  for (std::size_t k = 1; k <= d; ++k) p[k] = p[k - 1] * x;
  return p;
}

}  // namespace

double Polynomial2::operator()(double x, double y) const {
  check_shape(*this);
  const auto px = powers(x, degree), py = powers(y, degree);
  double v = 0.0;
  for (std::size_t i = 0; i <= degree; ++i)
    for (std::size_t j = 0; j <= degree; ++j) v += coeffs[i * (degree + 1) + j] * px[i] * py[j];
  return v;
}

double Polynomial2::dx(double x, double y) const {
  check_shape(*this);
  const auto px = powers(x, degree), py = powers(y, degree);
  double v = 0.0;
  for (std::size_t i = 1; i <= degree; ++i)
    for (std::size_t j = 0; j <= degree; ++j)
      v += static_cast<double>(i) * coeffs[i * (degree + 1) + j] * px[i - 1] * py[j];
  return v;
}

bool Polynomial2::is_zero() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c == 0.0; });
}

GibbsSpec GibbsSpec::quartic(double coupling) {
  GibbsSpec s;
  s.V.coeffs = {0.0, 0.0, 0.0, 0.0, 1.0};
  s.W = coupling == 0.0 ? Polynomial2::zero() : Polynomial2::bilinear(coupling);
  s.params = GibbsParams{std::max(std::abs(coupling), 1e-3), 4.0, 3.0, 0.5, 1.0, 1.0, 4.0};
  return s;
}

std::vector<GibbsCheck> check_gibbs_spec(const GibbsSpec& spec, std::uint64_t seed) {
  const GibbsParams& p = spec.params;
  for (double v : {p.J, p.L, p.N, p.sigma, p.A, p.B, p.C})
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("GibbsSpec: parameters must be positive and finite");
  if (spec.V.coeffs.empty()) throw std::invalid_argument("GibbsSpec: V has no coefficients");
  check_shape(spec.W);

  std::mt19937_64 rng(seed);
  std::vector<GibbsCheck> out;
  constexpr double slack = 1.0 + 1e-12;

  GibbsCheck sym{"gibbs 1)", "W(x,y) = W(y,x)", true, ""};
  {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 1000 && sym.ok; ++k) {
      const double x = u(rng), y = u(rng);
      const double a = spec.W(x, y), b = spec.W(y, x);
      if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
        sym.ok = false;
        sym.detail = "W(" + std::to_string(x) + ", " + std::to_string(y) + ") - W(y, x) = " + std::to_string(a - b);
      }
    }
  }
  out.push_back(sym);

  GibbsCheck w{"gibbs 2)", "|W|, |dW/dx| <= J (1 + |x| + |y|)^(N-1)", true, ""};
  GibbsCheck v{"gibbs 3)", "|V| <= C (1 + |x|)^L, |V'| <= C (1 + |x|)^(L-1)", true, ""};
  GibbsCheck c{"gibbs 4)", "V'(x) x >= A |x|^(N + sigma) - B", true, ""};
  for (double R : {1.0, 10.0, 100.0}) {
    std::uniform_real_distribution<double> u(-R, R);
    for (int k = 0; k < 500; ++k) {
      const double x = u(rng), y = u(rng);
      const double gw = p.J * std::pow(1.0 + std::abs(x) + std::abs(y), p.N - 1.0) * slack;
      if (w.ok && (std::abs(spec.W(x, y)) > gw || std::abs(spec.W.dx(x, y)) > gw)) {
        w.ok = false;
        w.detail = "violated at (" + std::to_string(x) + ", " + std::to_string(y) + ")";
      }
      const double gv = p.C * std::pow(1.0 + std::abs(x), p.L) * slack;
      const double gd = p.C * std::pow(1.0 + std::abs(x), p.L - 1.0) * slack;
      if (v.ok && (std::abs(spec.V(x)) > gv || std::abs(spec.V.derivative(x)) > gd)) {
        v.ok = false;
        v.detail = "violated at x = " + std::to_string(x);
      }
      const double lhs = spec.V.derivative(x) * x, rhs = p.A * std::pow(std::abs(x), p.N + p.sigma) - p.B;
      if (c.ok && lhs < rhs - 1e-12 * std::max(1.0, std::abs(rhs))) {
        c.ok = false;
        c.detail = "violated at x = " + std::to_string(x);
      }
    }
  }
  out.push_back(w);
  out.push_back(v);
  out.push_back(c);
  return out;
}

void validate_gibbs_spec(const GibbsSpec& spec, std::uint64_t seed) {
  for (const auto& c : check_gibbs_spec(spec, seed))
    if (!c.ok) throw HypothesisError(c.hypothesis, c.description + " fails: " + c.detail);
}

// ---------------------------------------------------------------------------
// lattices

LatticeGraph periodic_ring(std::size_t n) {
  LatticeGraph g;
  g.sites = 2 * n + 1;
  for (std::size_t k = 0; k + 1 < g.sites; ++k) g.edges.emplace_back(k, k + 1);
  g.edges.emplace_back(g.sites - 1, 0);
  return g;
}

LatticeGraph split_ring(std::size_t n, std::size_t m) {
  if (m >= n) throw std::invalid_argument("split_ring: need m < n");
  LatticeGraph g = periodic_ring(n);
  const std::size_t hi = n + m, lo = n - m;  // storage of lattice m and -m
  std::erase_if(g.edges, [&](const auto& e) {
    return (e.first == hi && e.second == hi + 1) || (e.first == lo - 1 && e.second == lo);
  });
  g.edges.emplace_back(hi, lo);
  return g;
}

std::vector<double> LatticeSample::column(std::size_t s) const {
  if (s >= sites) throw std::out_of_range("LatticeSample: site out of range");
  std::vector<double> c(count());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = states[k * sites + s];
  return c;
}

namespace {

struct Incidence {
  std::size_t a, b;  ///< edge endpoints
};

class LocalEnergy {
 public:
  LocalEnergy(const GibbsSpec& spec, const LatticeGraph& g) : spec_(spec), incident_(g.sites), w_zero_(spec.W.is_zero()) {
    for (const auto& e : g.edges) {
      if (e.first >= g.sites || e.second >= g.sites) throw std::invalid_argument("LatticeGraph: edge out of range");
      incident_[e.first].push_back({e.first, e.second});
      if (e.second != e.first) incident_[e.second].push_back({e.first, e.second});
    }
  }

  /// Terms of the energy that involve site k when it holds value v.
  double operator()(std::vector<double>& x, std::size_t k, double v) const {
    const double keep = x[k];
    x[k] = v;
    double e = spec_.V(v);
    if (!w_zero_)
      for (const auto& inc : incident_[k]) e += spec_.W(x[inc.a], x[inc.b]);
    x[k] = keep;
    return e;
  }

 private:
  const GibbsSpec& spec_;
  std::vector<std::vector<Incidence>> incident_;
  bool w_zero_;
};

}  // namespace

LatticeSample sample_gibbs(const GibbsSpec& spec, const LatticeGraph& graph, std::size_t num_samples,
                           const McmcConfig& cfg) {
  if (graph.sites == 0) throw std::invalid_argument("sample_gibbs: empty graph");
  if (num_samples == 0) throw std::invalid_argument("sample_gibbs: no samples requested");
  if (cfg.chains == 0 || cfg.thinning == 0 || cfg.adapt_interval == 0 || !(cfg.initial_step > 0.0))
    throw std::invalid_argument("sample_gibbs: invalid MCMC configuration");
  const std::size_t S = graph.sites, C = std::min(cfg.chains, num_samples);
  const LocalEnergy local(spec, graph);

  LatticeSample out;
  out.sites = S;
  out.n = (S - 1) / 2;
  out.seed = cfg.seed;
  out.burn_in = cfg.burn_in;
  out.thinning = cfg.thinning;
  out.chain_sizes.resize(C);
  for (std::size_t c = 0; c < C; ++c) out.chain_sizes[c] = num_samples / C + (c < num_samples % C ? 1 : 0);
  std::vector<std::size_t> offset(C, 0);
  for (std::size_t c = 1; c < C; ++c) offset[c] = offset[c - 1] + out.chain_sizes[c - 1];
  out.states.assign(num_samples * S, 0.0);

  std::vector<std::vector<double>> accept(C, std::vector<double>(S, 0.0)), steps(C);
  std::vector<std::size_t> tries(C, 0);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(C); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    std::mt19937_64 rng(stats::substream_seed(cfg.seed, c));
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(S, 0.0), step(S, cfg.initial_step), window(S, 0.0);
    const std::size_t total = cfg.burn_in + out.chain_sizes[c] * cfg.thinning;
    std::size_t recorded = 0;
    for (std::size_t sweep = 0; sweep < total; ++sweep) {
      const bool burning = sweep < cfg.burn_in;
      for (std::size_t k = 0; k < S; ++k) {
        const double prop = x[k] + step[k] * z(rng);
        const double dE = local(x, k, prop) - local(x, k, x[k]);
        const bool ok = dE <= 0.0 || u(rng) < std::exp(-dE);
        if (ok) x[k] = prop;
        if (burning)
          window[k] += ok;
        else
          accept[c][k] += ok;
      }
      if (burning && (sweep + 1) % cfg.adapt_interval == 0) {
        for (std::size_t k = 0; k < S; ++k) {
          const double rate = window[k] / static_cast<double>(cfg.adapt_interval);
          step[k] *= std::exp(2.0 * (rate - cfg.target_acceptance));
          window[k] = 0.0;
        }
      }
      if (!burning) {
        ++tries[c];
        if ((sweep - cfg.burn_in + 1) % cfg.thinning == 0) {
          std::copy(x.begin(), x.end(), out.states.begin() + static_cast<std::ptrdiff_t>((offset[c] + recorded) * S));
          ++recorded;
        }
      }
    }
    steps[c] = step;
  }

  out.acceptance.assign(S, 0.0);
  out.step_sizes.assign(S, 0.0);
  out.ess.assign(S, 0.0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t k = 0; k < S; ++k) {
      const double rate = accept[c][k] / static_cast<double>(tries[c]);
      if (rate < 0.05 || rate > 0.95)
        throw SamplerError("MCMC tuning failure: chain " + std::to_string(c) + " site " + std::to_string(k) +
                           " acceptance " + std::to_string(rate) + " outside [0.05, 0.95]");
      out.acceptance[k] += rate / static_cast<double>(C);
      out.step_sizes[k] += steps[c][k] / static_cast<double>(C);
    }
  for (std::size_t k = 0; k < S; ++k)
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<double> col(out.chain_sizes[c]);
      for (std::size_t t = 0; t < col.size(); ++t) col[t] = out.states[(offset[c] + t) * S + k];
      out.ess[k] += col.size() > 3 ? stats::effective_sample_size(col) : static_cast<double>(col.size());
    }
  return out;
}

LatticeSample sample_periodic_gibbs(const GibbsSpec& spec, std::size_t n, std::size_t num_samples,
                                    const McmcConfig& config) {
  if (n == 0) throw std::invalid_argument("sample_periodic_gibbs: need n >= 1");
  validate_gibbs_spec(spec);
  return sample_gibbs(spec, periodic_ring(n), num_samples, config);
}

LatticeSample cyclic_symmetrize(const LatticeSample& sample, bool full, std::uint64_t seed) {
  const std::size_t S = sample.sites, N = sample.count();
  LatticeSample out = sample;
  auto shifted = [&](std::size_t k, std::size_t s, double* dst) {
    for (std::size_t i = 0; i < S; ++i) dst[i] = sample.states[k * S + (i + S - s) % S];
  };
  if (full) {
    out.states.resize(N * S * S);
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t s = 0; s < S; ++s) shifted(k, s, out.states.data() + (k * S + s) * S);
    for (auto& c : out.chain_sizes) c *= S;
    out.shifts = S;
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, S - 1);
    for (std::size_t k = 0; k < N; ++k) shifted(k, pick(rng), out.states.data() + k * S);
    out.shifts = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// maps

std::vector<double> gaussian_cloud(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> out(count * dim);
  for (double& v : out) v = z(rng);
  return out;
}

std::vector<double> cyclic_expand(std::span<const double> cloud, std::size_t dim) {
  if (dim == 0 || cloud.size() % dim) throw std::invalid_argument("cyclic_expand: size not a multiple of dim");
  const std::size_t N = cloud.size() / dim;
  std::vector<double> out(N * dim * dim);
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t s = 0; s < dim; ++s)
      for (std::size_t i = 0; i < dim; ++i) out[(k * dim + s) * dim + i] = cloud[k * dim + (i + dim - s) % dim];
  return out;
}

double default_epsilon(std::span<const double> source, std::span<const double> target, std::size_t dim) {
  const std::size_t a = source.size() / dim, b = target.size() / dim;
  if (a == 0 || b == 0) throw std::invalid_argument("default_epsilon: empty cloud");
  const std::size_t sa = (a + 399) / 400, sb = (b + 399) / 400;
  std::vector<double> d;
  for (std::size_t i = 0; i < a; i += sa)
    for (std::size_t j = 0; j < b; j += sb) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double t = source[i * dim + k] - target[j * dim + k];
        s += t * t;
      }
      d.push_back(s);
    }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return 0.05 * *mid;
}

const char* to_string(MapMethod m) {
  switch (m) {
    case MapMethod::quantile_1d: return "quantile_1d";
    case MapMethod::exact: return "exact";
    case MapMethod::entropic: return "entropic";
  }
  return "unknown";
}

EmpiricalMap empirical_map(std::span<const double> source, std::span<const double> target, std::size_t dim,
                           double epsilon, std::span<const double> source_weights, bool force_entropic) {
  if (dim == 0 || source.empty() || target.empty() || source.size() % dim || target.size() % dim)
    throw std::invalid_argument("empirical_map: malformed point clouds");
  const std::size_t a = source.size() / dim, b = target.size() / dim;
  if (!source_weights.empty() && source_weights.size() != a)
    throw std::invalid_argument("empirical_map: one weight per source point required");
  EmpiricalMap out;
  out.dim = dim;
  const bool uniform = source_weights.empty();

  if (!force_entropic && dim == 1 && uniform && a == b) {
    out.method = MapMethod::quantile_1d;
    std::vector<std::size_t> order(a);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return source[i] < source[j]; });
    std::vector<double> y(target.begin(), target.end());
    std::sort(y.begin(), y.end());
    out.values.resize(a);
    for (std::size_t r = 0; r < a; ++r) out.values[order[r]] = y[r];
    return out;
  }

  std::vector<double> w = uniform ? std::vector<double>(a, 1.0) : std::vector<double>(source_weights.begin(), source_weights.end());
  const DiscreteMeasure mu(dim, std::vector<double>(source.begin(), source.end()), w);
  const DiscreteMeasure nu(dim, std::vector<double>(target.begin(), target.end()), std::vector<double>(b, 1.0));
  if (mu.size() != a) throw std::invalid_argument("empirical_map: source weights below the pruning threshold");

  if (!force_entropic && a <= 300 && b <= 300) {
    out.method = MapMethod::exact;
    out.values = barycentric_map(solve_discrete_ot(mu, nu).plan);
    return out;
  }

  out.method = MapMethod::entropic;
  out.epsilon = epsilon > 0.0 ? epsilon : default_epsilon(source, target, dim);
  SinkhornOptions opt;
  opt.epsilon = out.epsilon;
  opt.tol = 1e-8;
  const SinkhornResult r = sinkhorn(mu, nu, CostSpec::quadratic(), opt);
  if (!r.converged)
    throw SolverError("empirical_map: Sinkhorn did not converge (violation " + std::to_string(r.violation) + ")");
  out.extension.emplace(r);
  out.values = out.extension->apply(source);
  return out;
}

EmpiricalMap empirical_map_to_gaussian(const LatticeSample& sample, std::span<const double> gaussian_samples,
                                       double epsilon) {
  if (gaussian_samples.size() != sample.states.size())
    throw std::invalid_argument("empirical_map_to_gaussian: sample counts differ");
  return empirical_map(sample.states, gaussian_samples, sample.sites, epsilon);
}

EquivarianceReport equivariance_check(const LatticeSample& sample, const EmpiricalMap& map) {
  const std::size_t S = sample.sites, N = sample.count();
  if (map.values.size() != N * S) throw std::invalid_argument("equivariance_check: map does not match the sample");
  EquivarianceReport rep;
  rep.delta.assign(S, 0.0);
  if (S == 1) return rep;

  std::vector<double> shifted_values;
  const bool expanded = sample.shifts == S;
  if (!expanded) {
    if (!map.extension) throw std::invalid_argument("equivariance_check: unsymmetrized sample needs an out-of-sample map");
    std::vector<double> sx(N * S);
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t i = 0; i < S; ++i) sx[k * S + i] = sample.states[k * S + (i + S - 1) % S];
    shifted_values = map.extension->apply(sx);
  }
  auto t_sigma = [&](std::size_t k, std::size_t i) {
    if (!expanded) return shifted_values[k * S + i];
    const std::size_t r = k / S, s = k % S;
    return map.values[(r * S + (s + 1) % S) * S + i];
  };
  std::vector<std::vector<double>> sq(S, std::vector<double>(N));
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t i = 0; i < S; ++i) {
      const double d = t_sigma(k, i) - map.values[k * S + (i + S - 1) % S];
      sq[i][k] = d * d;
    }
  std::size_t arg = 0;
  for (std::size_t i = 0; i < S; ++i) {
    const auto e = stats::mean_batch(sq[i]);
    rep.delta[i] = e.mean;
    if (e.mean > rep.delta[arg] || i == 0) {
      arg = i;
      rep.standard_error = e.standard_error;
    }
  }
  rep.max_delta = rep.delta[arg];
  rep.vanishes = rep.max_delta <= 3.0 * rep.standard_error + 1e-10;
  return rep;
}

// ---------------------------------------------------------------------------
// entropy

std::vector<double> block_log_ratio(const GibbsSpec& spec, const LatticeSample& sample, std::size_t m) {
  if (m >= sample.n) throw std::invalid_argument("block_log_ratio: need m < n");
  const long mm = static_cast<long>(m);
  const std::size_t a = sample.site(mm), b = sample.site(-mm), c = sample.site(mm + 1), d = sample.site(-mm - 1);
  std::vector<double> z(sample.count());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const auto x = sample.state(k);
    z[k] = -spec.W(x[a], x[b]) + spec.W(x[a], x[c]) + spec.W(x[d], x[b]);
  }
  return z;
}

namespace {

/// log mean exp(sign * z) with its batch jackknife error.
stats::MeanEstimate log_mean_exp_jackknife(const std::vector<double>& z, double sign) {
  double shift = -std::numeric_limits<double>::infinity();
  for (double v : z) {
    if (!std::isfinite(v)) throw std::overflow_error("log-mean-exp: non-finite Z; try a smaller coupling J");
    shift = std::max(shift, sign * v);
  }
  std::vector<double> e(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) e[k] = std::exp(sign * z[k] - shift);
  auto est = stats::jackknife_of_means({e}, [&](std::span<const double> m) { return std::log(m[0]) + shift; });
  if (!std::isfinite(est.mean)) throw std::overflow_error("log-mean-exp overflow; try a smaller coupling J");
  return est;
}

}  // namespace

EntropyEstimate entropy_mn_estimate(const GibbsSpec& spec, const LatticeSample& sample_n, std::size_t m) {
  const std::vector<double> z = block_log_ratio(spec, sample_n, m);
  EntropyEstimate out;
  out.method = EntropyMethod::monte_carlo;
  out.samples = z.size();
  if (spec.W.is_zero()) return out;
  double shift = -std::numeric_limits<double>::infinity();
  for (double v : z) {
    if (!std::isfinite(v)) throw std::overflow_error("entropy_mn_estimate: non-finite Z; try a smaller coupling J");
    shift = std::max(shift, v);
  }
  std::vector<double> e(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) e[k] = std::exp(z[k] - shift);
  const auto est = stats::jackknife_of_means(
      {e, z}, [&](std::span<const double> mean) { return std::log(mean[0]) + shift - mean[1]; });
  if (!std::isfinite(est.mean)) throw std::overflow_error("entropy_mn_estimate: log-mean-exp overflow");
  out.value = est.mean;
  out.standard_error = est.standard_error;
  return out;
}

EntropyEstimate entropy_mn_crosscheck(const GibbsSpec& spec, const LatticeSample& sample_n, std::size_t m,
                                      std::size_t num_samples, const McmcConfig& config) {
  validate_gibbs_spec(spec);
  std::vector<double> neg_z = block_log_ratio(spec, sample_n, m);
  for (double& v : neg_z) v = -v;
  const auto first = stats::mean_batch(neg_z);
  McmcConfig cfg = config;
  cfg.seed = stats::substream_seed(config.seed, 0x5b1177ULL + m);
  const LatticeSample split = sample_gibbs(spec, split_ring(sample_n.n, m), num_samples, cfg);
  const auto second = log_mean_exp_jackknife(block_log_ratio(spec, split, m), -1.0);
  EntropyEstimate out;
  out.method = EntropyMethod::monte_carlo;
  out.samples = neg_z.size() + split.count();
  out.value = first.mean - second.mean;
  out.standard_error = std::hypot(first.standard_error, second.standard_error);
  return out;
}

stats::MeanEstimate exponential_moment(const LatticeSample& sample, double lambda, double power) {
  std::vector<double> v(sample.count(), 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    for (double x : sample.state(k)) v[k] += std::exp(lambda * std::pow(std::abs(x), power));
    v[k] /= static_cast<double>(sample.sites);
  }
  return stats::mean_batch(v);
}

// ---------------------------------------------------------------------------
// Cauchy experiment

namespace {

std::vector<double> project(std::span<const double> states, std::size_t S, const std::vector<std::size_t>& coords) {
  const std::size_t N = states.size() / S;
  std::vector<double> out(N * coords.size());
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t i = 0; i < coords.size(); ++i) out[k * coords.size() + i] = states[k * S + coords[i]];
  return out;
}

}  // namespace

CauchyReport cauchy_convergence_experiment(const GibbsSpec& spec, const std::vector<std::size_t>& m_list,
                                           std::size_t n, std::size_t samples, const CauchyOptions& options) {
  if (m_list.empty()) throw std::invalid_argument("cauchy: empty m_list");
  for (std::size_t k = 0; k < m_list.size(); ++k) {
    if (m_list[k] >= n) throw std::invalid_argument("cauchy: every m must be below n");
    if (k && m_list[k] <= m_list[k - 1]) throw std::invalid_argument("cauchy: m_list must be increasing");
  }
  if (options.ot_points < 2) throw std::invalid_argument("cauchy: ot_points must be at least 2");
  const std::size_t F = samples / options.ot_points;
  if (F < 4) throw std::invalid_argument("cauchy: samples must cover at least four folds of ot_points");
  const std::size_t P = options.ot_points, T = F * P;

  const LatticeSample sample = sample_periodic_gibbs(spec, n, T, options.mcmc);
  const std::size_t S = sample.sites;
  CauchyReport rep;
  rep.n = n;
  rep.samples = T;
  rep.folds = F;
  rep.acceptance = sample.acceptance;
  rep.min_ess = *std::min_element(sample.ess.begin(), sample.ess.end());
  {
    std::vector<double> sq(T, 0.0);
    for (std::size_t k = 0; k < T; ++k) {
      for (double x : sample.state(k)) sq[k] += x * x;
      sq[k] /= static_cast<double>(S);
    }
    rep.second_moment = stats::mean_batch(sq);
    rep.exp_moment = exponential_moment(sample, 0.1, spec.params.N);
  }

  std::vector<std::vector<double>> clouds(F);
  for (std::size_t f = 0; f < F; ++f) clouds[f] = gaussian_cloud(P, S, stats::substream_seed(options.mcmc.seed, 1000 + f));
  auto fold_states = [&](std::size_t f) { return std::span<const double>(sample.states.data() + f * P * S, P * S); };
  rep.epsilon = options.epsilon > 0.0 ? options.epsilon : default_epsilon(fold_states(0), clouds[0], S);

  // independent chain supplying the outer blocks of the product surrogate
  McmcConfig second = options.mcmc;
  second.seed = stats::substream_seed(options.mcmc.seed, 0x0de7ULL);
  const LatticeSample other = sample_gibbs(spec, periodic_ring(n), T, second);

  auto joint_maps = [&](std::span<const double> states) {
    std::vector<std::vector<double>> out(F);
    for (std::size_t f = 0; f < F; ++f) {
      const std::span<const double> src(states.data() + f * P * S, P * S);
      out[f] = empirical_map(src, clouds[f], S, rep.epsilon, {}, true).extension->apply(states);
    }
    return out;
  };
  const auto full_maps = joint_maps(sample.states);

  for (std::size_t m : m_list) {
    CauchyRow row;
    row.m = m;
    std::vector<std::size_t> inner, outer;
    for (std::size_t s = 0; s < S; ++s) (s + m >= n && s <= n + m ? inner : outer).push_back(s);
    const std::vector<double> z = block_log_ratio(spec, sample, m);
    const double zmax = *std::max_element(z.begin(), z.end());
    std::vector<double> w(T);
    for (std::size_t k = 0; k < T; ++k) w[k] = std::exp(z[k] - zmax);
    {
      double s1 = 0.0, s2 = 0.0;
      for (double v : w) s1 += v, s2 += v * v;
      row.weight_ess = s1 * s1 / s2 / static_cast<double>(T);
    }

    // a_f(x) = T_n^f(x) - (T_m^f, T_{m,n}^f)(x) at every state
    auto residuals = [&](std::span<const double> states, const std::vector<std::vector<double>>& joint,
                         const std::vector<double>& weights) {
      const auto all_in = project(states, S, inner), all_out = project(states, S, outer);
      std::vector<std::vector<double>> a(F, std::vector<double>(T * S));
      for (std::size_t f = 0; f < F; ++f) {
        const std::span<const double> src(states.data() + f * P * S, P * S);
        const std::span<const double> wf = weights.empty() ? std::span<const double>() : std::span<const double>(weights.data() + f * P, P);
        const auto tin = empirical_map(project(src, S, inner), project(clouds[f], S, inner), inner.size(), rep.epsilon, wf, true)
                             .extension->apply(all_in);
        const auto tout = empirical_map(project(src, S, outer), project(clouds[f], S, outer), outer.size(), rep.epsilon, wf, true)
                              .extension->apply(all_out);
        for (std::size_t k = 0; k < T; ++k) {
          for (std::size_t i = 0; i < inner.size(); ++i)
            a[f][k * S + inner[i]] = joint[f][k * S + inner[i]] - tin[k * inner.size() + i];
          for (std::size_t i = 0; i < outer.size(); ++i)
            a[f][k * S + outer[i]] = joint[f][k * S + outer[i]] - tout[k * outer.size() + i];
        }
      }
      return a;
    };
    const auto a = residuals(sample.states, full_maps, w);

    // product surrogate: same inner blocks and clouds, outer blocks from the
    // independent chain; its discrepancy is zero, so its estimate is bias
    std::vector<double> surrogate = sample.states;
    for (std::size_t k = 0; k < T; ++k)
      for (std::size_t s : outer) surrogate[k * S + s] = other.states[k * S + s];
    const auto b = residuals(surrogate, joint_maps(surrogate), {});

    auto dot = [&](const std::vector<std::vector<double>>& r, std::size_t i, std::size_t j, std::size_t k) {
      double s = 0.0;
      for (std::size_t c = 0; c < S; ++c) s += r[i][k * S + c] * r[j][k * S + c];
      return s;
    };
    // average of <a_i, a_j> - <b_i, b_j> over fold pairs and held-out states
    auto estimate = [&](std::size_t dropped, bool corrected) {
      double total = 0.0;
      std::size_t points = 0;
      for (std::size_t k = 0; k < T; ++k) {
        const std::size_t home = k / P;
        if (home == dropped) continue;
        double s = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < F; ++i)
          for (std::size_t j = i + 1; j < F; ++j) {
            if (i == home || j == home || i == dropped || j == dropped) continue;
            s += dot(a, i, j, k) - (corrected ? dot(b, i, j, k) : 0.0);
            ++pairs;
          }
        total += s / static_cast<double>(pairs);
        ++points;
      }
      return total / static_cast<double>(points);
    };
    row.D_raw = estimate(F, false);
    row.D = estimate(F, true);
    std::vector<double> jack(F);
    for (std::size_t f = 0; f < F; ++f) jack[f] = estimate(f, true);
    const double jm = std::accumulate(jack.begin(), jack.end(), 0.0) / static_cast<double>(F);
    double ss = 0.0;
    for (double v : jack) ss += (v - jm) * (v - jm);
    row.D_se = std::sqrt(static_cast<double>(F - 1) / static_cast<double>(F) * ss);

    const EntropyEstimate ent = entropy_mn_estimate(spec, sample, m);
    row.entropy = ent.value;
    row.entropy_se = ent.standard_error;
    row.bound = 2.0 * ent.value;
    row.combined_se = std::sqrt(row.D_se * row.D_se + 4.0 * row.entropy_se * row.entropy_se);
    row.per_coordinate = row.D / static_cast<double>(2 * m + 1);
    row.pass = row.D <= row.bound + 3.0 * row.combined_se;
    if (options.crosscheck_entropy) row.crosscheck = entropy_mn_crosscheck(spec, sample, m, T, options.mcmc);
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace seqot
