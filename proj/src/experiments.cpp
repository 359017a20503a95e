#include "seqot/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <random>
#include <set>

#include "seqot/bounds.hpp"
#include "seqot/error.hpp"
#include "seqot/gibbs.hpp"
#include "seqot/invariance.hpp"
#include "seqot/processes.hpp"
#include "seqot/stats.hpp"

namespace seqot::experiments {

using io::ConfigError;
using io::get;
using io::get_or;

// ---------------------------------------------------------------------------
// registry

const std::vector<RegistryEntry>& registry() {
  static const std::vector<RegistryEntry> entries = {
      {"ot_basic",
       "exact discrete transport with duality, cyclical monotonicity and 1D quantile checks",
       {"solve_discrete_ot", "check_cyclical_monotonicity", "graph_concentration", "quantile_transport_1d",
        "gaussian_w2"},
       {"instances", "random", "method", "cycle_length", "gaussian_1d"},
       false},
      {"invariant_duality",
       "primal and dual values of group-invariant transport",
       {"solve_invariant_ot", "invariant_duality_value", "haar_project"},
       {"instances", "random", "max_group_size"},
       false},
      {"transitive_identity",
       "full quadratic value against dim times the invariant one-coordinate value",
       {"transitive_identity_check", "solve_invariant_ot", "solve_discrete_ot"},
       {"instances", "random", "max_group_size"},
       false},
      {"no_map",
       "invariant plan between a^d and (a^d + b^d)/2 and its graph concentration",
       {"no_map_counterexample", "solve_invariant_ot", "graph_concentration"},
       {"a", "b", "d", "tol"},
       false},
      {"quasi_product",
       "block-map approximation of tilted products against the entropy bound",
       {"quasi_product_approx", "diagonal_transport", "talagrand_gap"},
       {"p", "q", "f", "g", "n_list", "max_core_nodes", "tolerance"},
       false},
      {"definetti",
       "transport between exchangeable mixtures through the component-level plan",
       {"definetti_ot", "cached_w2sq", "quantile_transport_1d"},
       {"mu", "nu", "resolution"},
       false},
      {"mixture_entropy",
       "Monte Carlo entropy of the m-block conditional against -log min weight",
       {"mixture_entropy_bound_check"},
       {"mixture", "m", "n", "samples"},
       true},
      {"talagrand",
       "transport-entropy inequality for one-dimensional monotone maps",
       {"talagrand_gap", "certified_log_concavity", "relative_entropy"},
       {"mu", "nu", "target", "K", "grid", "tolerance"},
       false},
      {"lemma21",
       "both shift-density estimates for the potential of a monotone map",
       {"lemma21_check", "shift_density_norm", "assumption_A_probe"},
       {"mu", "nu", "t", "epsilon", "p", "q", "grid", "shift_steps", "probe"},
       false},
      {"gibbs_cauchy",
       "periodic Gibbs sampling, equivariance of the Gaussian map and D(m) against 2 Ent",
       {"sample_periodic_gibbs", "empirical_map_to_gaussian", "equivariance_check", "entropy_mn_estimate",
        "cauchy_convergence_experiment"},
       {"spec", "coupling", "n", "m_list", "samples", "ot_points", "epsilon", "mcmc", "crosscheck_entropy",
        "equivariance", "write_samples"},
       true},
  };
  return entries;
}

const RegistryEntry* find_experiment(const std::string& name) {
  for (const auto& e : registry())
    if (e.name == name) return &e;
  return nullptr;
}

bool Outcome::pass() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& ctx) {
  if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(ctx + ": unknown key '" + key + "'");
}

bool stochastic(const RegistryEntry& e, const json& params) { return e.always_stochastic || params.contains("random"); }

}  // namespace

ExperimentConfig parse_config(const json& j, const std::string& output_override) {
  io::require_keys(j, {"experiment", "params", "seed", "output_dir"}, "config");
  ExperimentConfig c;
  c.experiment = get<std::string>(j, "experiment", "config");
  const RegistryEntry* e = find_experiment(c.experiment);
  if (!e) throw ConfigError("config: unknown experiment '" + c.experiment + "'");
  c.params = j.contains("params") ? j.at("params") : json::object();
  check_keys(c.params, e->params, c.experiment + " params");
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      throw ConfigError("config: seed must be a non-negative 64-bit integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (stochastic(*e, c.params) && !c.seed) throw ConfigError("config: experiment '" + c.experiment + "' needs a seed");
  if (!output_override.empty())
    c.output_dir = output_override;
  else if (j.contains("output_dir"))
    c.output_dir = get<std::string>(j, "output_dir", "config");
  else
    c.output_dir = std::filesystem::path("out") / c.experiment;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::string& output_override) {
  return parse_config(io::read_json_file(path), output_override);
}

json canonical_config(const ExperimentConfig& c) {
  json j{{"experiment", c.experiment}, {"params", c.params}};
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  return j;
}

ExitCode classify_exception(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const json::exception*>(&e) ||
      dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::length_error*>(&e) ||
      dynamic_cast<const HypothesisError*>(&e))
    return ExitCode::config_error;
  return ExitCode::runtime_failure;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// shared helpers

namespace {

void expect(Outcome& o, std::string name, bool pass, double value, double threshold, std::string detail = {}) {
  o.assertions.push_back({std::move(name), pass, value, threshold, std::move(detail)});
}

void note(std::vector<HypothesisItem>& list, std::string hyp, std::string desc, bool ok, std::string detail = {}) {
  list.push_back({std::move(hyp), std::move(desc), ok, std::move(detail)});
}

DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t atoms, std::size_t dim) {
  std::uniform_real_distribution<double> pos(-2.0, 2.0), w(0.05, 1.0);
  std::vector<double> coords(atoms * dim), weights(atoms);
  for (double& c : coords) c = pos(rng);
  for (double& x : weights) x = w(rng);
  return DiscreteMeasure(dim, std::move(coords), std::move(weights));
}

std::size_t uniform_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::size_t positive(const json& p, const char* key, std::size_t fallback, const std::string& ctx) {
  const auto v = get_or<std::size_t>(p, key, fallback, ctx);
  if (v == 0) throw ConfigError(ctx + ": '" + key + "' must be positive");
  return v;
}

std::vector<Marginal1D> laws(const json& p, const char* key, const std::string& ctx) {
  if (!p.contains(key) || !p.at(key).is_array()) throw ConfigError(ctx + ": '" + key + "' must be an array of laws");
  std::vector<Marginal1D> out;
  for (const auto& l : p.at(key)) out.push_back(io::marginal_from_json(l));
  return out;
}

Marginal1D law(const json& p, const char* key, const std::string& ctx) {
  if (!p.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
  return io::marginal_from_json(p.at(key));
}

QuadratureGrid quadrature(const json& p, const std::string& ctx) {
  QuadratureGrid q;
  if (!p.contains("grid")) return q;
  const json& g = p.at("grid");
  io::require_keys(g, {"lo", "hi", "nodes"}, ctx + " grid");
  q.lo = get_or<double>(g, "lo", q.lo, ctx);
  q.hi = get_or<double>(g, "hi", q.hi, ctx);
  q.nodes = get_or<std::size_t>(g, "nodes", q.nodes, ctx);
  if (!(q.hi > q.lo) || q.nodes < 3) throw ConfigError(ctx + ": grid needs lo < hi and at least 3 nodes");
  return q;
}

MixtureSpec mixture(const json& j, const std::string& ctx) {
  io::require_keys(j, {"weights", "components", "labels"}, ctx);
  MixtureSpec m;
  m.weights = get<std::vector<double>>(j, "weights", ctx);
  m.components = laws(j, "components", ctx);
  m.labels = get_or<std::vector<std::string>>(j, "labels", {}, ctx);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ctx + ": " + e.what());
  }
  return m;
}

CylinderTilt tilt(const json& p, const char* key, const std::string& ctx) {
  CylinderTilt t;
  if (!p.contains(key)) return t;
  const json& j = p.at(key);
  io::require_keys(j, {"linear", "amplitude", "scale"}, ctx + " " + key);
  t.linear = get_or<std::vector<double>>(j, "linear", {}, ctx);
  t.amplitude = get_or<double>(j, "amplitude", 0.0, ctx);
  t.scale = get_or<double>(j, "scale", 1.0, ctx);
  return t;
}

json tilt_json(const CylinderTilt& t) { return json{{"linear", t.linear}, {"amplitude", t.amplitude}, {"scale", t.scale}}; }

json estimate_json(const EntropyEstimate& e) {
  return json{{"value", e.value}, {"standard_error", e.standard_error}, {"method", to_string(e.method)},
              {"samples", e.samples}};
}

json mean_json(const stats::MeanEstimate& m) {
  return json{{"mean", m.mean}, {"standard_error", m.standard_error}, {"samples", m.samples}};
}

svg::Series series(std::string label, std::vector<double> x, std::vector<double> y, bool line = true) {
  return svg::Series{std::move(label), std::move(x), std::move(y), line};
}

// Measure pairs shared by the group experiments.
struct GroupInstance {
  DiscreteMeasure mu, nu;
  GroupAction group;
  std::size_t coordinate = 0;
  std::string origin;
};

std::vector<GroupInstance> group_instances(const ExperimentConfig& c) {
  const std::string ctx = c.experiment + " params";
  const json& p = c.params;
  const auto cap = get_or<std::size_t>(p, "max_group_size", GroupAction::kMaxSize, ctx);
  std::vector<GroupInstance> out;
  if (p.contains("instances")) {
    const json& list = p.at("instances");
    if (!list.is_array()) throw ConfigError(ctx + ": 'instances' must be an array");
    for (const auto& inst : list) {
      io::require_keys(inst, {"mu", "nu", "group", "coordinate"}, ctx + " instance");
      if (!inst.contains("mu") || !inst.contains("nu") || !inst.contains("group"))
        throw ConfigError(ctx + ": an instance needs mu, nu and group");
      GroupInstance g{io::measure_from_json(inst.at("mu")), io::measure_from_json(inst.at("nu")),
                      io::group_from_json(inst.at("group"), cap), get_or<std::size_t>(inst, "coordinate", 0, ctx),
                      "explicit"};
      if (g.coordinate >= g.group.dim()) throw ConfigError(ctx + ": coordinate outside the group dimension");
      out.push_back(std::move(g));
    }
  }
  if (p.contains("random")) {
    const json& r = p.at("random");
    io::require_keys(r, {"count", "dim", "group", "source_seeds", "target_seeds"}, ctx + " random");
    const auto count = positive(r, "count", 10, ctx);
    const auto dim = positive(r, "dim", 2, ctx);
    const auto kind = get_or<std::string>(r, "group", "symmetric", ctx);
    const auto sa = positive(r, "source_seeds", 3, ctx), sb = positive(r, "target_seeds", 3, ctx);
    GroupAction g;
    if (kind == "symmetric") {
      if (dim > 7) throw std::length_error("random symmetric group of dim " + std::to_string(dim) + " exceeds the cap");
      g = GroupAction::symmetric(dim);
    } else if (kind == "cyclic") {
      g = GroupAction::cyclic(dim);
    } else {
      throw ConfigError(ctx + ": random group must be 'symmetric' or 'cyclic'");
    }
    if (g.order() > cap) throw std::length_error("group order " + std::to_string(g.order()) + " exceeds the cap");
    for (std::size_t k = 0; k < count; ++k) {
      std::mt19937_64 rng(stats::substream_seed(*c.seed, k));
      out.push_back({symmetrize_measure(random_measure(rng, sa, dim), g),
                     symmetrize_measure(random_measure(rng, sb, dim), g), g, 0, "random"});
    }
  }
  if (out.empty()) throw ConfigError(ctx + ": give 'instances' or 'random'");
  return out;
}

void check_group_instances(const std::vector<GroupInstance>& list, std::vector<HypothesisItem>& items,
                           bool need_transitive) {
  std::size_t largest = 0;
  double worst = 0.0;
  bool transitive = true;
  for (const auto& g : list) {
    largest = std::max(largest, g.group.order());
    worst = std::max({worst, invariance_defect(g.mu, g.group), invariance_defect(g.nu, g.group)});
    transitive = transitive && g.group.transitive();
  }
  note(items, "group closure", "generated group within the size cap", true,
       "largest order " + std::to_string(largest));
  const bool inv = worst <= 1e-9;
  note(items, "invariant marginals", "mu and nu are G-invariant", inv, "largest defect " + std::to_string(worst));
  if (!inv) throw HypothesisError("invariant marginals", "a marginal is not invariant under its group");
  if (need_transitive) {
    note(items, "transitivity", "the group acts transitively on coordinates", transitive);
    if (!transitive) throw HypothesisError("transitivity", "the cost identity needs a transitive group action");
  }
}

// ---------------------------------------------------------------------------
// ot_basic

struct OtInstance {
  DiscreteMeasure mu, nu;
  std::string origin;
};

std::vector<OtInstance> ot_instances(const ExperimentConfig& c) {
  const std::string ctx = "ot_basic params";
  const json& p = c.params;
  std::vector<OtInstance> out;
  if (p.contains("instances")) {
    if (!p.at("instances").is_array()) throw ConfigError(ctx + ": 'instances' must be an array");
    for (const auto& inst : p.at("instances")) {
      io::require_keys(inst, {"mu", "nu"}, ctx + " instance");
      if (!inst.contains("mu") || !inst.contains("nu")) throw ConfigError(ctx + ": an instance needs mu and nu");
      out.push_back({io::measure_from_json(inst.at("mu")), io::measure_from_json(inst.at("nu")), "explicit"});
      if (out.back().mu.dim() != out.back().nu.dim()) throw ConfigError(ctx + ": mu and nu dimensions differ");
    }
  }
  if (p.contains("random")) {
    const json& r = p.at("random");
    io::require_keys(r, {"count", "min_atoms", "max_atoms", "max_dim"}, ctx + " random");
    const auto count = positive(r, "count", 20, ctx);
    const auto lo = positive(r, "min_atoms", 2, ctx), hi = positive(r, "max_atoms", 30, ctx);
    const auto max_dim = positive(r, "max_dim", 3, ctx);
    if (lo > hi) throw ConfigError(ctx + ": min_atoms exceeds max_atoms");
    for (std::size_t k = 0; k < count; ++k) {
      std::mt19937_64 rng(stats::substream_seed(*c.seed, k));
      const std::size_t dim = uniform_size(rng, 1, max_dim);
      const std::size_t a = uniform_size(rng, lo, hi), b = uniform_size(rng, lo, hi);
      out.push_back({random_measure(rng, a, dim), random_measure(rng, b, dim), "random"});
    }
  }
  return out;
}

Outcome run_ot_basic(const ExperimentConfig& c) {
  const std::string ctx = "ot_basic params";
  const json& p = c.params;
  const auto method_name = get_or<std::string>(p, "method", "network_simplex", ctx);
  OtOptions opt;
  if (method_name == "network_simplex")
    opt.method = OtMethod::network_simplex;
  else if (method_name == "dense_simplex")
    opt.method = OtMethod::dense_simplex;
  else
    throw ConfigError(ctx + ": method must be 'network_simplex' or 'dense_simplex'");
  const auto cycle_length = positive(p, "cycle_length", 3, ctx);
  const auto instances = ot_instances(c);
  if (instances.empty() && !p.contains("gaussian_1d")) throw ConfigError(ctx + ": nothing to solve");

  Outcome o;
  o.csv_header = {"index", "dim", "atoms_mu", "atoms_nu", "value", "dual_value", "gap", "concentration"};
  json rows = json::array();
  double worst_gap = 0.0, worst_violation = 0.0, worst_marginal = 0.0, worst_quantile = 0.0;
  std::size_t cycle_failures = 0;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const auto& in = instances[k];
    const OtResult r = solve_discrete_ot(in.mu, in.nu, CostSpec::quadratic(), opt);
    const CycleReport cyc = check_cyclical_monotonicity(r.plan, cycle_length);
    const double conc = graph_concentration(r.plan, 1e-9);
    const double scale = 1.0 + std::abs(r.value);
    worst_gap = std::max(worst_gap, std::abs(r.gap) / scale);
    worst_violation = std::max(worst_violation, r.dual_violation / scale);
    worst_marginal = std::max(worst_marginal, r.plan.marginal_error());
    if (!cyc.pass) ++cycle_failures;
    json row{{"origin", in.origin}, {"dim", in.mu.dim()}, {"atoms_mu", in.mu.size()}, {"atoms_nu", in.nu.size()},
             {"value", r.value}, {"dual_value", r.dual_value}, {"gap", r.gap}, {"dual_violation", r.dual_violation},
             {"marginal_error", r.plan.marginal_error()}, {"iterations", r.iterations},
             {"cyclically_monotone", cyc.pass}, {"concentration", conc}};
    if (in.mu.dim() == 1) {
      const double q = quantile_transport_1d(quantile_from_discrete(in.mu), quantile_from_discrete(in.nu)).w2sq;
      row["quantile_value"] = q;
      worst_quantile = std::max(worst_quantile, std::abs(q - r.value));
    }
    if (in.origin == "explicit") row["plan"] = io::to_json(r.plan, 1e-15);
    rows.push_back(std::move(row));
    o.csv_rows.push_back({double(k), double(in.mu.dim()), double(in.mu.size()), double(in.nu.size()), r.value,
                          r.dual_value, r.gap, conc});
    xs.push_back(r.value);
    ys.push_back(r.dual_value);
  }
  o.results["instances"] = rows;
  if (!instances.empty()) {
    expect(o, "duality gap |v - d| / (1 + |v|)", worst_gap <= 1e-9, worst_gap, 1e-9);
    expect(o, "dual feasibility", worst_violation <= 1e-9, worst_violation, 1e-9);
    expect(o, "plan marginals", worst_marginal <= 1e-10, worst_marginal, 1e-10);
    expect(o, "cyclical monotonicity failures", cycle_failures == 0, double(cycle_failures), 0.0,
           "cycles up to length " + std::to_string(cycle_length));
    if (std::any_of(instances.begin(), instances.end(), [](const OtInstance& i) { return i.mu.dim() == 1; }))
      expect(o, "1D quantile value against the LP", worst_quantile <= 1e-6, worst_quantile, 1e-6);
  }

  if (p.contains("gaussian_1d")) {
    const json& list = p.at("gaussian_1d");
    if (!list.is_array()) throw ConfigError(ctx + ": 'gaussian_1d' must be an array");
    json g1 = json::array();
    double worst_closed = 0.0;
    for (const auto& item : list) {
      io::require_keys(item, {"mu", "nu", "resolution"}, ctx + " gaussian_1d");
      auto gauss = [&](const char* key) {
        const Marginal1D m = law(item, key, ctx);
        if (!std::holds_alternative<Gaussian1D>(m)) throw ConfigError(ctx + ": gaussian_1d laws must be gaussian");
        return std::get<Gaussian1D>(m);
      };
      const Gaussian1D a = gauss("mu"), b = gauss("nu");
      const auto res = positive(item, "resolution", 10000, ctx);
      const double t = quantile_transport_1d(quantile_from_gaussian(a, res), quantile_from_gaussian(b, res)).w2sq;
      const double exact = gaussian_w2(GaussianSpec({a.mean}, {a.sd * a.sd}), GaussianSpec({b.mean}, {b.sd * b.sd}));
      const double err = std::abs(t - exact) / (1.0 + exact);
      worst_closed = std::max(worst_closed, err);
      g1.push_back({{"mu", io::to_json(Marginal1D(a))}, {"nu", io::to_json(Marginal1D(b))}, {"resolution", res},
                    {"quantile_value", t}, {"closed_form", exact}, {"relative_error", err}});
    }
    o.results["gaussian_1d"] = g1;
    expect(o, "1D quantile value against the Gaussian closed form", worst_closed <= 1e-4, worst_closed, 1e-4);
  }
  o.plot = {"exact transport: primal against dual", "primal value", "dual value",
            {series("instances", xs, ys, false), series("diagonal", xs, xs, false)}};
  return o;
}

// ---------------------------------------------------------------------------
// group experiments

Outcome run_invariant_duality(const ExperimentConfig& c) {
  const auto list = group_instances(c);
  Outcome o;
  check_group_instances(list, o.checklist, false);
  o.csv_header = {"index", "dim", "group_order", "primal", "dual", "gap", "max_violation"};
  json rows = json::array();
  double worst_gap = 0.0, worst_violation = 0.0;
  bool invariant = true;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const auto& in = list[k];
    const CostSpec cost = CostSpec::single_coordinate(in.coordinate);
    const InvariantOtResult primal = solve_invariant_ot(in.mu, in.nu, in.group, cost);
    const InvariantDual dual = invariant_duality_value(in.mu, in.nu, in.group, cost);
    const double gap = std::abs(primal.value - dual.value);
    worst_gap = std::max(worst_gap, gap / (1.0 + std::abs(primal.value)));
    worst_violation = std::max(worst_violation, dual.max_violation);
    invariant = invariant && dual.invariant;
    json row{{"origin", in.origin},         {"dim", in.group.dim()},      {"group_order", in.group.order()},
             {"coordinate", in.coordinate}, {"primal", primal.value},     {"dual", dual.value},
             {"gap", gap},                  {"max_violation", dual.max_violation},
             {"pair_orbits", primal.pair_orbits}, {"invariant_potentials", dual.invariant}};
    if (in.origin == "explicit") row["plan"] = io::to_json(primal.plan, 1e-15);
    rows.push_back(std::move(row));
    o.csv_rows.push_back({double(k), double(in.group.dim()), double(in.group.order()), primal.value, dual.value, gap,
                          dual.max_violation});
    xs.push_back(primal.value);
    ys.push_back(dual.value);
  }
  o.results["instances"] = rows;
  expect(o, "primal equals dual |p - d| / (1 + |p|)", worst_gap <= 1e-8, worst_gap, 1e-8);
  expect(o, "dual feasibility", worst_violation <= 1e-9, worst_violation, 1e-9);
  expect(o, "potentials constant on orbits", invariant, invariant ? 1.0 : 0.0, 1.0);
  o.plot = {"invariant transport: primal against dual", "primal", "dual",
            {series("instances", xs, ys, false), series("diagonal", xs, xs, false)}};
  return o;
}

Outcome run_transitive_identity(const ExperimentConfig& c) {
  const auto list = group_instances(c);
  Outcome o;
  check_group_instances(list, o.checklist, true);
  o.csv_header = {"index", "dim", "group_order", "full_value", "scaled_invariant", "abs_difference"};
  json rows = json::array();
  double worst = 0.0;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const auto& in = list[k];
    const TransitiveIdentityReport r = transitive_identity_check(in.mu, in.nu, in.group);
    worst = std::max(worst, r.rel_difference);
    rows.push_back({{"origin", in.origin},
                    {"dim", in.group.dim()},
                    {"group_order", in.group.order()},
                    {"full_value", r.full_value},
                    {"invariant_value", r.invariant_value},
                    {"scaled_invariant", r.scaled_invariant},
                    {"abs_difference", r.abs_difference},
                    {"rel_difference", r.rel_difference},
                    {"coordinate_costs", r.coordinate_costs},
                    {"coordinate_spread", r.coordinate_spread}});
    o.csv_rows.push_back({double(k), double(in.group.dim()), double(in.group.order()), r.full_value,
                          r.scaled_invariant, r.abs_difference});
    xs.push_back(r.full_value);
    ys.push_back(r.scaled_invariant);
  }
  o.results["instances"] = rows;
  expect(o, "W2^2 = dim * invariant value, relative to 1 + W2^2", worst <= 1e-8, worst, 1e-8);
  o.plot = {"transitive identity", "full W2^2", "dim x invariant value",
            {series("instances", xs, ys, false), series("diagonal", xs, xs, false)}};
  return o;
}

DiscreteMeasure line_measure(const json& p, const char* key, const std::string& ctx) {
  if (!p.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
  const DiscreteMeasure m = io::measure_from_json(p.at(key));
  if (m.dim() != 1) throw ConfigError(ctx + ": '" + key + "' must be one-dimensional");
  return m;
}

Outcome run_no_map(const ExperimentConfig& c) {
  const std::string ctx = "no_map params";
  const json& p = c.params;
  const DiscreteMeasure a = line_measure(p, "a", ctx), b = line_measure(p, "b", ctx);
  const auto d = positive(p, "d", 2, ctx);
  if (d > 7) throw std::length_error("no_map: the symmetric group of dim " + std::to_string(d) + " exceeds the cap");
  const double tol = get_or<double>(p, "tol", 1e-9, ctx);
  const GroupAction g = GroupAction::symmetric(d);
  const NoMapReport r = no_map_counterexample(a, b, d, g, tol);
  const NoMapReport control = no_map_counterexample(a, a, d, g, tol);

  Outcome o;
  note(o.checklist, "group closure", "symmetric group on the coordinates", true,
       "order " + std::to_string(g.order()));
  o.results = {{"d", d},
               {"group_order", g.order()},
               {"identical_components", r.identical_components},
               {"value", r.solution.value},
               {"concentration", r.concentration},
               {"plan", io::to_json(r.solution.plan, 1e-15)},
               {"control_value", control.solution.value},
               {"control_concentration", control.concentration}};
  if (!r.identical_components)
    expect(o, "invariant plan is not supported on a graph", r.concentration < 0.99, r.concentration, 0.99);
  expect(o, "control a = b is supported on a graph", control.concentration >= 1.0 - 1e-12, control.concentration,
         1.0 - 1e-12);
  o.csv_header = {"case", "value", "concentration"};
  o.csv_rows = {{0.0, r.solution.value, r.concentration}, {1.0, control.solution.value, control.concentration}};
  o.plot = {"graph concentration of the invariant plan", "case (0: a vs b, 1: a vs a)", "concentration",
            {series("concentration", {0.0, 1.0}, {r.concentration, control.concentration}, false)}};
  return o;
}

// ---------------------------------------------------------------------------
// quasi-products

QuasiProductSpec quasi_spec(const json& p, const std::string& ctx) {
  QuasiProductSpec s;
  s.p.factors = laws(p, "p", ctx);
  s.q.factors = laws(p, "q", ctx);
  s.f = tilt(p, "f", ctx);
  s.g = tilt(p, "g", ctx);
  return s;
}

QuasiProductOptions quasi_options(const json& p, const std::string& ctx) {
  QuasiProductOptions opt;
  opt.n_list = get_or<std::vector<std::size_t>>(p, "n_list", opt.n_list, ctx);
  opt.max_core_nodes = positive(p, "max_core_nodes", opt.max_core_nodes, ctx);
  opt.tolerance = get_or<double>(p, "tolerance", opt.tolerance, ctx);
  return opt;
}

void quasi_checklist(const QuasiProductSpec& s, std::vector<HypothesisItem>& items) {
  const bool sizes = s.p.size() == s.q.size() && s.p.size() >= std::max(s.f.arity(), s.g.arity());
  note(items, "quasi-product 1)", "both tilts depend on finitely many coordinates of the products", sizes);
  if (!sizes) throw HypothesisError("quasi-product 1)", "products must cover the tilted coordinates");
  const bool bounded = std::abs(s.f.amplitude) < 1.0 && std::abs(s.g.amplitude) < 1.0;
  note(items, "quasi-product 2)", "tilt densities bounded above and away from zero", bounded);
  if (!bounded) throw HypothesisError("quasi-product 2)", "tilt amplitudes must lie in (-1, 1)");
  for (std::size_t i = 0; i < s.q.size(); ++i) {
    const double K = certified_log_concavity(s.q.factors[i]);
    note(items, "quasi-product 3)", "reference factor " + std::to_string(i) + " of nu is log-concave", K > 0.0,
         "K = " + std::to_string(K));
    if (!(K > 0.0)) throw HypothesisError("quasi-product 3)", "a reference factor of nu is not log-concave");
  }
}

Outcome run_quasi_product(const ExperimentConfig& c) {
  const std::string ctx = "quasi_product params";
  const QuasiProductSpec s = quasi_spec(c.params, ctx);
  const QuasiProductOptions opt = quasi_options(c.params, ctx);
  Outcome o;
  quasi_checklist(s, o.checklist);
  const QuasiProductReport r = quasi_product_approx(s, opt);
  json levels = json::array(), pairs = json::array();
  for (const auto& l : r.levels)
    levels.push_back({{"n", l.n}, {"core", l.core}, {"nodes", l.nodes}, {"f_entropy", l.f_entropy},
                      {"diagonal_gap", l.diagonal_gap}, {"value", l.value}});
  o.csv_header = {"m", "n", "D", "entropy", "bound", "asserted"};
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_m;
  for (const auto& q : r.pairs) {
    pairs.push_back({{"m", q.m}, {"n", q.n}, {"D", q.D}, {"entropy", q.entropy},
                     {"bound", q.asserted ? json(q.bound) : json(nullptr)}, {"asserted", q.asserted},
                     {"pass", q.pass}});
    o.csv_rows.push_back({double(q.m), double(q.n), q.D, q.entropy, q.bound, q.asserted ? 1.0 : 0.0});
    if (q.asserted)
      expect(o, "D <= (2/K) Ent at m=" + std::to_string(q.m) + ", n=" + std::to_string(q.n), q.pass, q.D,
             q.bound + opt.tolerance);
    by_m[q.m].first.push_back(double(q.n));
    by_m[q.m].second.push_back(q.D);
  }
  o.results = {{"f", tilt_json(s.f)},           {"g", tilt_json(s.g)},           {"levels", levels},
               {"pairs", pairs},                {"K", r.K},                      {"contraction", r.contraction},
               {"g_min", r.g_min},              {"g_max", r.g_max},              {"f_log_f", r.f_log_f},
               {"jensen_monotone", r.jensen_monotone}, {"resolution", r.resolution}};
  expect(o, "f_n entropies nondecreasing and below f log f", r.jensen_monotone, r.f_log_f, r.f_log_f);
  svg::Plot plot{"block-map discrepancy", "n", "D(m, n)", {}};
  for (auto& [m, xy] : by_m) plot.series.push_back(series("m = " + std::to_string(m), xy.first, xy.second));
  o.plot = plot;
  return o;
}

// ---------------------------------------------------------------------------
// mixtures

Outcome run_definetti(const ExperimentConfig& c) {
  const std::string ctx = "definetti params";
  const json& p = c.params;
  if (!p.contains("mu") || !p.contains("nu")) throw ConfigError(ctx + ": needs mu and nu");
  const MixtureSpec mu = mixture(p.at("mu"), ctx + " mu"), nu = mixture(p.at("nu"), ctx + " nu");
  const auto res = positive(p, "resolution", 10000, ctx);
  Outcome o;
  note(o.checklist, "mixture weights", "positive weights summing to one on both sides", true);
  const DeFinettiResult r = definetti_ot(mu, nu, res);
  const std::size_t K = mu.size(), L = nu.size();

  json cost = json::array();
  for (std::size_t k = 0; k < K; ++k)
    cost.push_back(std::vector<double>(r.ground_cost.begin() + static_cast<std::ptrdiff_t>(k * L),
                                       r.ground_cost.begin() + static_cast<std::ptrdiff_t>((k + 1) * L)));
  json triplets = json::array();
  std::vector<double> xs, ys;
  o.csv_header = {"k", "l", "weight", "ground_cost"};
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < L; ++l)
      if (r.outer(k, l) > 1e-15) {
        triplets.push_back({k, l, r.outer(k, l)});
        o.csv_rows.push_back({double(k), double(l), r.outer(k, l), r.ground_cost[k * L + l]});
        xs.push_back(double(k));
        ys.push_back(double(l));
      }
  o.results = {{"ground_cost", cost},     {"outer_plan", triplets},     {"value", r.value},
               {"concentration", r.concentration}, {"is_map", r.is_map}, {"resolution", res}};
  if (r.is_map) o.results["assignment"] = r.assignment;

  const auto table = r.ground_cost;
  const CostSpec lookup = CostSpec::from_function([table, L](std::span<const double> x, std::span<const double> y) {
    return table[static_cast<std::size_t>(std::lround(x[0])) * L + static_cast<std::size_t>(std::lround(y[0]))];
  });
  const CycleReport cyc = check_cyclical_monotonicity(r.outer, std::min<std::size_t>({K, L, 4}), lookup);
  double product = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < L; ++l) product += mu.weights[k] * nu.weights[l] * r.ground_cost[k * L + l];
  expect(o, "outer plan marginals", r.outer.marginal_error() <= 1e-10, r.outer.marginal_error(), 1e-10);
  expect(o, "outer plan cyclically monotone for the W2^2 ground cost", cyc.pass, cyc.excess, 0.0);
  expect(o, "value at most the independent coupling", r.value <= product + 1e-12, r.value, product);
  if (K == 1 && L == 1)
    expect(o, "one-atom mixtures reduce to 1D W2^2", std::abs(r.value - r.ground_cost[0]) <= 1e-12,
           std::abs(r.value - r.ground_cost[0]), 1e-12);
  o.plot = {"component-level plan support", "mu component", "nu component", {series("outer plan", xs, ys, false)}};
  return o;
}

Outcome run_mixture_entropy(const ExperimentConfig& c) {
  const std::string ctx = "mixture_entropy params";
  const json& p = c.params;
  if (!p.contains("mixture")) throw ConfigError(ctx + ": missing key 'mixture'");
  const MixtureSpec mix = mixture(p.at("mixture"), ctx + " mixture");
  const auto m = get_or<std::size_t>(p, "m", 1, ctx), n = positive(p, "n", 4, ctx);
  const auto samples = positive(p, "samples", 100000, ctx);
  if (m > n) throw ConfigError(ctx + ": m must not exceed n");
  Outcome o;
  note(o.checklist, "mixture weights", "positive weights summing to one", true);
  const MixtureEntropyReport r = mixture_entropy_bound_check(mix, m, n, samples, *c.seed);
  o.results = {{"m", r.m},         {"n", r.n},         {"estimate", estimate_json(r.estimate)},
               {"bound", r.bound}, {"skipped", r.skipped}};
  const double limit = r.bound + 3.0 * r.estimate.standard_error;
  expect(o, "entropy <= -log min weight + 3 SE", r.pass, r.estimate.value, limit);
  o.csv_header = {"m", "n", "estimate", "standard_error", "bound"};
  o.csv_rows = {{double(m), double(n), r.estimate.value, r.estimate.standard_error, r.bound}};
  o.plot = {"mixture entropy", "n", "nats",
            {series("estimate", {double(n)}, {r.estimate.value}, false),
             series("estimate + 3 SE", {double(n)}, {r.estimate.value + 3.0 * r.estimate.standard_error}, false),
             series("-log min weight", {double(n)}, {r.bound}, false)}};
  return o;
}

// ---------------------------------------------------------------------------
// one-dimensional bounds

struct TalagrandInputs {
  Marginal1D mu, nu, target;
  double K = 0.0;
  QuadratureGrid grid;
  double tolerance = 1e-8;
};

TalagrandInputs talagrand_inputs(const json& p) {
  const std::string ctx = "talagrand params";
  TalagrandInputs in{law(p, "mu", ctx), law(p, "nu", ctx), {}, get_or<double>(p, "K", 0.0, ctx), quadrature(p, ctx),
                     get_or<double>(p, "tolerance", 1e-8, ctx)};
  in.target = p.contains("target") ? law(p, "target", ctx) : in.nu;
  return in;
}

void talagrand_checklist(const TalagrandInputs& in, std::vector<HypothesisItem>& items) {
  const double certified = certified_log_concavity(in.target);
  const bool ok = certified > 0.0 && in.K <= certified * (1.0 + 1e-12);
  note(items, "log-concave target", "(-log m)'' >= K on the target", ok,
       "certified K = " + std::to_string(certified) + ", requested " + std::to_string(in.K));
  if (!ok) throw HypothesisError("log-concave target", "requested K exceeds the certified constant");
}

Outcome run_talagrand(const ExperimentConfig& c) {
  const TalagrandInputs in = talagrand_inputs(c.params);
  Outcome o;
  talagrand_checklist(in, o.checklist);
  const TalagrandReport r = talagrand_gap(in.mu, in.nu, in.target, in.K, in.grid, in.tolerance);
  o.results = {{"lhs", r.lhs}, {"rhs", r.rhs}, {"slack", r.slack}, {"K", r.K}, {"resolution", r.resolution},
               {"pass", r.pass}};
  expect(o, "Ent >= K/2 * |T_mu - T_nu|^2 (slack >= -tol)", r.pass, r.slack, -in.tolerance);
  o.csv_header = {"K", "lhs", "rhs", "slack"};
  o.csv_rows = {{r.K, r.lhs, r.rhs, r.slack}};
  o.plot = {"transport-entropy inequality", "K", "value",
            {series("entropy", {r.K}, {r.lhs}, false), series("transport term", {r.K}, {r.rhs}, false)}};
  return o;
}

struct Lemma21Inputs {
  Grid1D mu, nu;
  std::vector<double> t;
  double epsilon = 0.5, p = 2.0, q = 2.0;
  std::size_t shift_steps = 64;
  bool probe = false;
};

Lemma21Inputs lemma21_inputs(const json& p) {
  const std::string ctx = "lemma21 params";
  const QuadratureGrid grid = quadrature(p, ctx);
  Lemma21Inputs in;
  try {
    in.mu = density_grid(law(p, "mu", ctx), grid);
    in.nu = density_grid(law(p, "nu", ctx), grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ctx + ": " + e.what());
  }
  if (p.contains("t") && p.at("t").is_number())
    in.t = {get<double>(p, "t", ctx)};
  else
    in.t = get_or<std::vector<double>>(p, "t", {0.1, 0.2, 0.5, 1.0}, ctx);
  if (in.t.empty()) throw ConfigError(ctx + ": 't' is empty");
  in.epsilon = get_or<double>(p, "epsilon", in.epsilon, ctx);
  in.p = get_or<double>(p, "p", in.p, ctx);
  in.q = get_or<double>(p, "q", in.q, ctx);
  in.shift_steps = positive(p, "shift_steps", in.shift_steps, ctx);
  in.probe = get_or<bool>(p, "probe", false, ctx);
  return in;
}

void lemma21_checklist(const Lemma21Inputs& in, std::vector<HypothesisItem>& items) {
  const bool conj = in.p > 1.0 && in.q > 1.0 && std::abs(1.0 / in.p + 1.0 / in.q - 1.0) <= 1e-12;
  note(items, "conjugate exponents", "1/p + 1/q = 1 with p, q > 1", conj);
  if (!conj) throw HypothesisError("conjugate exponents", "p and q must be conjugate exponents above 1");
  const bool eps = in.epsilon > 0.0;
  note(items, "moment exponent", "epsilon > 0", eps);
  if (!eps) throw HypothesisError("moment exponent", "epsilon must be positive");
  const bool t = std::all_of(in.t.begin(), in.t.end(), [](double v) { return v > 0.0; });
  note(items, "positive shifts", "every t > 0", t);
  if (!t) throw HypothesisError("positive shifts", "t values must be positive");
}

Outcome run_lemma21(const ExperimentConfig& c) {
  const Lemma21Inputs in = lemma21_inputs(c.params);
  Outcome o;
  lemma21_checklist(in, o.checklist);
  json rows = json::array();
  o.csv_header = {"t", "lhs1", "rhs1", "lhs2", "rhs2"};
  std::vector<double> l1, r1, l2, r2;
  bool p1 = true, p2 = true;
  double worst1 = std::numeric_limits<double>::infinity(), worst2 = worst1;
  for (double t : in.t) {
    const Lemma21Report r = lemma21_check(in.mu, in.nu, t, in.epsilon, in.p, in.q, in.shift_steps);
    rows.push_back({{"t", t},           {"lhs1", r.lhs1},       {"rhs1", r.rhs1},        {"lhs2", r.lhs2},
                    {"rhs2", r.rhs2},   {"slack1", r.slack1},   {"slack2", r.slack2},    {"moment1", r.moment1},
                    {"moment2", r.moment2}, {"sup_shift", r.sup_shift}, {"sup_shift_minus1", r.sup_shift_minus1},
                    {"pass1", r.pass1}, {"pass2", r.pass2}});
    o.csv_rows.push_back({t, r.lhs1, r.rhs1, r.lhs2, r.rhs2});
    l1.push_back(r.lhs1);
    r1.push_back(r.rhs1);
    l2.push_back(r.lhs2);
    r2.push_back(r.rhs2);
    p1 = p1 && r.pass1;
    p2 = p2 && r.pass2;
    worst1 = std::min(worst1, r.slack1);
    worst2 = std::min(worst2, r.slack2);
  }
  o.results = {{"epsilon", in.epsilon}, {"p", in.p}, {"q", in.q}, {"shift_steps", in.shift_steps}, {"rows", rows}};
  expect(o, "first shift estimate on every t", p1, worst1, 0.0, "smallest slack");
  expect(o, "second shift estimate on every t", p2, worst2, 0.0, "smallest slack");
  if (in.probe) {
    const AssumptionAReport a = assumption_A_probe(in.mu, in.nu, in.p, in.q, in.epsilon, in.t, in.shift_steps);
    o.results["assumption_A"] = {{"t", a.t}, {"p_of_t", a.p_of_t}, {"moment", a.moment},
                                 {"moment_finite", a.moment_finite}, {"vanishes", a.vanishes}};
  }
  o.plot = {"shift-density estimates", "t", "value",
            {series("lhs 1", in.t, l1), series("rhs 1", in.t, r1), series("lhs 2", in.t, l2),
             series("rhs 2", in.t, r2)}};
  return o;
}

// ---------------------------------------------------------------------------
// Gibbs lattices

GibbsSpec gibbs_spec(const json& p, const std::string& ctx) {
  if (p.contains("spec") && p.contains("coupling")) throw ConfigError(ctx + ": give either 'spec' or 'coupling'");
  if (p.contains("spec")) return io::gibbs_from_json(p.at("spec"));
  return GibbsSpec::quartic(get_or<double>(p, "coupling", 0.0, ctx));
}

McmcConfig mcmc_config(const json& p, std::uint64_t seed, const std::string& ctx) {
  McmcConfig m;
  m.seed = seed;
  if (!p.contains("mcmc")) return m;
  const json& j = p.at("mcmc");
  io::require_keys(j, {"chains", "burn_in", "thinning", "initial_step", "target_acceptance", "adapt_interval"},
                   ctx + " mcmc");
  m.chains = positive(j, "chains", m.chains, ctx);
  m.burn_in = get_or<std::size_t>(j, "burn_in", m.burn_in, ctx);
  m.thinning = positive(j, "thinning", m.thinning, ctx);
  m.initial_step = get_or<double>(j, "initial_step", m.initial_step, ctx);
  m.target_acceptance = get_or<double>(j, "target_acceptance", m.target_acceptance, ctx);
  m.adapt_interval = positive(j, "adapt_interval", m.adapt_interval, ctx);
  if (!(m.initial_step > 0.0) || !(m.target_acceptance > 0.0 && m.target_acceptance < 1.0))
    throw ConfigError(ctx + ": mcmc step must be positive and the target acceptance in (0, 1)");
  return m;
}

void gibbs_checklist(const GibbsSpec& spec, std::uint64_t seed, std::vector<HypothesisItem>& items) {
  for (const auto& ch : check_gibbs_spec(spec, seed)) {
    note(items, ch.hypothesis, ch.description, ch.ok, ch.detail);
    if (!ch.ok) throw HypothesisError(ch.hypothesis, ch.description + (ch.detail.empty() ? "" : " (" + ch.detail + ")"));
  }
}

struct GibbsInputs {
  GibbsSpec spec;
  std::size_t n = 4, samples = 10000;
  std::vector<std::size_t> m_list{1, 2};
  CauchyOptions options;
  std::size_t equivariance_states = 0;
  double equivariance_epsilon = 0.0;
  bool write_samples = false;
};

GibbsInputs gibbs_inputs(const ExperimentConfig& c) {
  const std::string ctx = "gibbs_cauchy params";
  const json& p = c.params;
  GibbsInputs in;
  in.spec = gibbs_spec(p, ctx);
  in.n = positive(p, "n", in.n, ctx);
  in.samples = positive(p, "samples", in.samples, ctx);
  in.m_list = get_or<std::vector<std::size_t>>(p, "m_list", in.m_list, ctx);
  for (std::size_t m : in.m_list)
    if (m == 0 || m >= in.n) throw ConfigError(ctx + ": every m must satisfy 1 <= m < n");
  in.options.ot_points = positive(p, "ot_points", in.options.ot_points, ctx);
  in.options.epsilon = get_or<double>(p, "epsilon", 0.0, ctx);
  in.options.mcmc = mcmc_config(p, *c.seed, ctx);
  in.options.crosscheck_entropy = get_or<bool>(p, "crosscheck_entropy", false, ctx);
  if (in.samples / in.options.ot_points < 4)
    throw ConfigError(ctx + ": samples must hold at least 4 folds of ot_points states");
  if (p.contains("equivariance")) {
    const json& e = p.at("equivariance");
    io::require_keys(e, {"states", "epsilon"}, ctx + " equivariance");
    in.equivariance_states = positive(e, "states", 200, ctx);
    in.equivariance_epsilon = get_or<double>(e, "epsilon", 0.0, ctx);
  }
  in.write_samples = get_or<bool>(p, "write_samples", false, ctx);
  return in;
}

Outcome run_gibbs_cauchy(const ExperimentConfig& c) {
  const GibbsInputs in = gibbs_inputs(c);
  Outcome o;
  gibbs_checklist(in.spec, *c.seed, o.checklist);
  const CauchyReport r = cauchy_convergence_experiment(in.spec, in.m_list, in.n, in.samples, in.options);

  json rows = json::array();
  o.csv_header = {"m", "D", "D_se", "D_raw", "entropy", "entropy_se", "bound", "per_coordinate"};
  std::vector<double> ms, ds, bounds;
  for (const auto& row : r.rows) {
    json j{{"m", row.m},
           {"D", row.D},
           {"D_se", row.D_se},
           {"D_raw", row.D_raw},
           {"entropy", row.entropy},
           {"entropy_se", row.entropy_se},
           {"bound", row.bound},
           {"combined_se", row.combined_se},
           {"per_coordinate", row.per_coordinate},
           {"weight_ess", row.weight_ess},
           {"pass", row.pass}};
    if (row.crosscheck) j["entropy_crosscheck"] = estimate_json(*row.crosscheck);
    rows.push_back(std::move(j));
    o.csv_rows.push_back({double(row.m), row.D, row.D_se, row.D_raw, row.entropy, row.entropy_se, row.bound,
                          row.per_coordinate});
    expect(o, "D(m) <= 2 Ent + 3 SE at m=" + std::to_string(row.m), row.pass, row.D,
           row.bound + 3.0 * row.combined_se);
    ms.push_back(double(row.m));
    ds.push_back(row.D);
    bounds.push_back(row.bound);
  }
  const auto [amin, amax] = std::minmax_element(r.acceptance.begin(), r.acceptance.end());
  o.results = {{"spec", io::to_json(in.spec)},
               {"n", r.n},
               {"samples", r.samples},
               {"folds", r.folds},
               {"epsilon", r.epsilon},
               {"rows", rows},
               {"acceptance_min", r.acceptance.empty() ? 0.0 : *amin},
               {"acceptance_max", r.acceptance.empty() ? 0.0 : *amax},
               {"min_ess", r.min_ess},
               {"second_moment", mean_json(r.second_moment)},
               {"exp_moment", mean_json(r.exp_moment)}};

  if (in.equivariance_states > 0) {
    McmcConfig mc = in.options.mcmc;
    mc.seed = stats::substream_seed(*c.seed, 0xe9u);
    const LatticeSample base = sample_periodic_gibbs(in.spec, in.n, in.equivariance_states, mc);
    const LatticeSample sym = cyclic_symmetrize(base, true);
    const auto cloud = cyclic_expand(gaussian_cloud(in.equivariance_states, base.sites,
                                                    stats::substream_seed(*c.seed, 0xe9au)),
                                     base.sites);
    const EmpiricalMap map = empirical_map_to_gaussian(sym, cloud, in.equivariance_epsilon);
    const EquivarianceReport eq = equivariance_check(sym, map);
    o.results["equivariance"] = {{"states", sym.count()},     {"method", to_string(map.method)},
                                 {"epsilon", map.epsilon},    {"delta", eq.delta},
                                 {"max_delta", eq.max_delta}, {"standard_error", eq.standard_error}};
    expect(o, "cyclic equivariance delta vanishes (max <= 3 SE + 1e-10)", eq.vanishes, eq.max_delta,
           3.0 * eq.standard_error + 1e-10);
  }
  if (in.write_samples) {
    o.lattice = sample_periodic_gibbs(in.spec, in.n, in.samples, in.options.mcmc);
    o.gibbs_spec = in.spec;
  }
  o.plot = {"Cauchy discrepancy against the entropy bound", "m", "value",
            {series("D(m)", ms, ds), series("2 Ent", ms, bounds)}};
  return o;
}

}  // namespace

// ---------------------------------------------------------------------------
// validate / run

std::vector<HypothesisItem> validate(const ExperimentConfig& c) {
  std::vector<HypothesisItem> items;
  const std::string& e = c.experiment;
  if (e == "ot_basic") {
    const auto list = ot_instances(c);
    note(items, "finite supports", "discrete measures with positive weights", true,
         std::to_string(list.size()) + " instances");
  } else if (e == "invariant_duality" || e == "transitive_identity") {
    check_group_instances(group_instances(c), items, e == "transitive_identity");
  } else if (e == "no_map") {
    const std::string ctx = "no_map params";
    line_measure(c.params, "a", ctx);
    line_measure(c.params, "b", ctx);
    const auto d = positive(c.params, "d", 2, ctx);
    if (d > 7) throw std::length_error("no_map: the symmetric group of dim " + std::to_string(d) + " exceeds the cap");
    note(items, "group closure", "symmetric group on the coordinates", true,
         "order " + std::to_string(GroupAction::symmetric(d).order()));
  } else if (e == "quasi_product") {
    quasi_options(c.params, "quasi_product params");
    quasi_checklist(quasi_spec(c.params, "quasi_product params"), items);
  } else if (e == "definetti") {
    const json& p = c.params;
    if (!p.contains("mu") || !p.contains("nu")) throw ConfigError("definetti params: needs mu and nu");
    mixture(p.at("mu"), "definetti params mu");
    mixture(p.at("nu"), "definetti params nu");
    note(items, "mixture weights", "positive weights summing to one on both sides", true);
  } else if (e == "mixture_entropy") {
    if (!c.params.contains("mixture")) throw ConfigError("mixture_entropy params: missing key 'mixture'");
    mixture(c.params.at("mixture"), "mixture_entropy params mixture");
    note(items, "mixture weights", "positive weights summing to one", true);
  } else if (e == "talagrand") {
    talagrand_checklist(talagrand_inputs(c.params), items);
  } else if (e == "lemma21") {
    lemma21_checklist(lemma21_inputs(c.params), items);
  } else if (e == "gibbs_cauchy") {
    const GibbsInputs in = gibbs_inputs(c);
    gibbs_checklist(in.spec, *c.seed, items);
  }
  return items;
}

Outcome run(const ExperimentConfig& c) {
  const std::string& e = c.experiment;
  if (e == "ot_basic") return run_ot_basic(c);
  if (e == "invariant_duality") return run_invariant_duality(c);
  if (e == "transitive_identity") return run_transitive_identity(c);
  if (e == "no_map") return run_no_map(c);
  if (e == "quasi_product") return run_quasi_product(c);
  if (e == "definetti") return run_definetti(c);
  if (e == "mixture_entropy") return run_mixture_entropy(c);
  if (e == "talagrand") return run_talagrand(c);
  if (e == "lemma21") return run_lemma21(c);
  if (e == "gibbs_cauchy") return run_gibbs_cauchy(c);
  throw ConfigError("config: unknown experiment '" + e + "'");
}

json make_report(const ExperimentConfig& c, const Outcome& o, const std::string& timestamp) {
  const RegistryEntry* entry = find_experiment(c.experiment);
  json assertions = json::array(), checklist = json::array();
  for (const auto& a : o.assertions)
    assertions.push_back({{"name", a.name}, {"pass", a.pass}, {"value", a.value}, {"threshold", a.threshold},
                          {"detail", a.detail}});
  for (const auto& h : o.checklist)
    checklist.push_back({{"hypothesis", h.hypothesis}, {"description", h.description}, {"ok", h.ok},
                         {"detail", h.detail}});
  const json config = canonical_config(c);
  return json{{"schema_version", kSchemaVersion},
              {"experiment", c.experiment},
              {"operations", entry ? entry->operations : std::vector<std::string>{}},
              {"config", config},
              {"config_hash", io::content_hash(config)},
              {"hypotheses", checklist},
              {"results", o.results},
              {"assertions", assertions},
              {"pass", o.pass()},
              {"timestamp", timestamp}};
}

Outcome run_to_directory(const ExperimentConfig& c) {
  Outcome o = run(c);
  const auto& dir = c.output_dir;
  io::write_atomic(dir / "report.json", make_report(c, o, utc_timestamp()).dump(2) + "\n");
  io::write_atomic(dir / "data.csv", io::to_csv(o.csv_header, o.csv_rows));
  io::write_atomic(dir / "plot.svg", svg::render(o.plot));
  if (o.lattice && o.gibbs_spec) io::write_lattice_sample(dir / "samples.bin", *o.lattice, *o.gibbs_spec, canonical_config(c));
  return o;
}

}  // namespace seqot::experiments
