#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sys/wait.h>

#include "seqot/error.hpp"
#include "seqot/experiments.hpp"

namespace fs = std::filesystem;
namespace ex = seqot::experiments;
using json = nlohmann::json;

namespace {

const fs::path kSource = SEQOT_SOURCE_DIR;

fs::path work(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "seqot_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout and stderr captured in `dir`.
Result cli(const std::string& args, const fs::path& dir, const std::string& output_dir = {}) {
  const char* exe = std::getenv("SEQOT_CLI");
  REQUIRE_MESSAGE(exe != nullptr, "SEQOT_CLI must point at the CLI binary");
  const fs::path log = dir / "cli.log";
  std::string cmd;
  if (!output_dir.empty()) cmd += "OUTPUT_DIR='" + output_dir + "' ";
  cmd += std::string("'") + exe + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

fs::path config(const std::string& name) { return kSource / "configs" / (name + ".json"); }
fs::path fixture(const std::string& name) { return kSource / "tests" / "data" / (name + ".json"); }

json without_timestamp(json j) {
  j.erase("timestamp");
  return j;
}

}  // namespace

TEST_CASE("registry covers every experiment with library operations") {
  const std::set<std::string> expected{"ot_basic",  "invariant_duality", "transitive_identity", "no_map",
                                       "quasi_product", "definetti", "mixture_entropy", "talagrand", "lemma21",
                                       "gibbs_cauchy"};
  const std::set<std::string> library_ops{
      "solve_discrete_ot", "check_cyclical_monotonicity", "graph_concentration", "quantile_transport_1d",
      "gaussian_w2", "solve_invariant_ot", "invariant_duality_value", "haar_project", "transitive_identity_check",
      "no_map_counterexample", "quasi_product_approx", "diagonal_transport", "talagrand_gap", "definetti_ot",
      "cached_w2sq", "mixture_entropy_bound_check", "certified_log_concavity", "relative_entropy", "lemma21_check",
      "shift_density_norm", "assumption_A_probe", "sample_periodic_gibbs", "empirical_map_to_gaussian",
      "equivariance_check", "entropy_mn_estimate", "cauchy_convergence_experiment"};
  std::set<std::string> names;
  for (const auto& e : ex::registry()) {
    names.insert(e.name);
    CHECK_MESSAGE(!e.operations.empty(), e.name);
    for (const auto& op : e.operations) CHECK_MESSAGE(library_ops.count(op) == 1, std::string(e.name + " -> " + op));
    CHECK(ex::find_experiment(e.name) == &e);
  }
  CHECK(names == expected);
  CHECK(ex::find_experiment("nope") == nullptr);
}

TEST_CASE("example configs parse and validate") {
  for (const auto& e : ex::registry()) {
    const fs::path p = config(e.name);
    REQUIRE_MESSAGE(fs::exists(p), p.string());
    const ex::ExperimentConfig c = ex::load_config(p);
    CHECK(c.experiment == e.name);
    CHECK_NOTHROW(ex::validate(c));
  }
}

TEST_CASE("config parsing is strict") {
  using seqot::io::ConfigError;
  const json base{{"experiment", "talagrand"},
                  {"params", {{"mu", {{"family", "gaussian"}, {"mean", 1.0}, {"sd", 1.0}}},
                              {"nu", {{"family", "gaussian"}, {"mean", 0.0}, {"sd", 1.0}}}}}};
  CHECK_NOTHROW(ex::parse_config(base));
  json extra = base;
  extra["verbose"] = true;
  CHECK_THROWS_AS(ex::parse_config(extra), ConfigError);
  json unknown = base;
  unknown["experiment"] = "frobnicate";
  CHECK_THROWS_AS(ex::parse_config(unknown), ConfigError);
  json bad_param = base;
  bad_param["params"]["Kappa"] = 1.0;
  CHECK_THROWS_AS(ex::parse_config(bad_param), ConfigError);
  json negative = base;
  negative["seed"] = -3;
  CHECK_THROWS_AS(ex::parse_config(negative), ConfigError);
  json fractional = base;
  fractional["seed"] = 1.5;
  CHECK_THROWS_AS(ex::parse_config(fractional), ConfigError);
  json big = base;
  big["seed"] = 18446744073709551615ULL;
  CHECK(*ex::parse_config(big).seed == 18446744073709551615ULL);
}

TEST_CASE("seeds are required exactly for stochastic configs") {
  using seqot::io::ConfigError;
  const json random_ot{{"experiment", "ot_basic"}, {"params", {{"random", {{"count", 2}}}}}};
  CHECK_THROWS_AS(ex::parse_config(random_ot), ConfigError);
  json seeded = random_ot;
  seeded["seed"] = 5;
  CHECK_NOTHROW(ex::parse_config(seeded));
  const json explicit_ot{{"experiment", "ot_basic"},
                         {"params", {{"instances", json::array()}}}};
  CHECK_NOTHROW(ex::parse_config(explicit_ot));
  CHECK_THROWS_AS(ex::load_config(fixture("missing_seed")), ConfigError);
}

TEST_CASE("OUTPUT_DIR overrides output_dir and never enters the report config") {
  const ex::ExperimentConfig a = ex::load_config(config("talagrand"));
  const ex::ExperimentConfig b = ex::load_config(config("talagrand"), "/tmp/elsewhere");
  CHECK(a.output_dir == fs::path("out/talagrand"));
  CHECK(b.output_dir == fs::path("/tmp/elsewhere"));
  CHECK(ex::canonical_config(a) == ex::canonical_config(b));
  CHECK_FALSE(ex::canonical_config(a).contains("output_dir"));
}

TEST_CASE("exception classes map onto exit codes") {
  CHECK(ex::classify_exception(seqot::io::ConfigError("x")) == ex::ExitCode::config_error);
  CHECK(ex::classify_exception(seqot::HypothesisError("gibbs 1)", "x")) == ex::ExitCode::config_error);
  CHECK(ex::classify_exception(std::length_error("x")) == ex::ExitCode::config_error);
  CHECK(ex::classify_exception(seqot::SolverError("x")) == ex::ExitCode::runtime_failure);
  CHECK(ex::classify_exception(seqot::SamplerError("x")) == ex::ExitCode::runtime_failure);
  CHECK(ex::classify_exception(std::runtime_error("x")) == ex::ExitCode::runtime_failure);
}

TEST_CASE("list-experiments prints the registry") {
  const fs::path dir = work("list");
  const Result r = cli("list-experiments", dir);
  CHECK(r.code == 0);
  for (const auto& e : ex::registry()) CHECK_MESSAGE(r.out.find(e.name) != std::string::npos, e.name);
}

TEST_CASE("validate reports the hypothesis checklist") {
  const fs::path dir = work("validate");
  const Result ok = cli("validate '" + config("gibbs_cauchy").string() + "'", dir);
  CHECK(ok.code == 0);
  CHECK(ok.out.find("ok") != std::string::npos);
  CHECK(ok.out.find("gibbs 4)") != std::string::npos);

  const Result asym = cli("validate '" + fixture("asymmetric_w").string() + "'", dir);
  CHECK(asym.code == 2);
  CHECK(asym.out.find("gibbs 1)") != std::string::npos);
  CHECK(asym.out.find("W(x,y) = W(y,x)") != std::string::npos);

  const Result cap = cli("validate '" + fixture("group_over_cap").string() + "'", dir);
  CHECK(cap.code == 2);
  CHECK(cap.out.find("size cap of 100") != std::string::npos);

  CHECK(cli("validate '" + fixture("unknown_key").string() + "'", dir).code == 2);
  CHECK(cli("validate '" + fixture("missing_seed").string() + "'", dir).code == 2);
  CHECK(cli("validate '" + (dir / "absent.json").string() + "'", dir).code == 2);
  std::ofstream(dir / "broken.json") << "{\"experiment\": ";
  CHECK(cli("validate '" + (dir / "broken.json").string() + "'", dir).code == 2);
  CHECK(cli("frobnicate", dir).code == 2);
}

TEST_CASE("run writes report, csv and plot for the equality case") {
  const fs::path dir = work("talagrand");
  const Result r = cli("run '" + config("talagrand").string() + "'", dir, (dir / "out").string());
  CHECK(r.code == 0);
  const json report = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report["schema_version"] == ex::kSchemaVersion);
  CHECK(report["experiment"] == "talagrand");
  CHECK(report["pass"] == true);
  CHECK(report["results"]["lhs"].get<double>() == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(report["results"]["rhs"].get<double>() == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(report.contains("timestamp"));
  CHECK(slurp(dir / "out" / "data.csv").rfind("K,lhs,rhs,slack\n", 0) == 0);
  CHECK(slurp(dir / "out" / "plot.svg").find("</svg>") != std::string::npos);
}

TEST_CASE("run on the S2 invariant instance") {
  const fs::path dir = work("s2");
  const Result r = cli("run '" + config("invariant_duality").string() + "'", dir, (dir / "out").string());
  CHECK(r.code == 0);
  const json report = json::parse(slurp(dir / "out" / "report.json"));
  const json& inst = report["results"]["instances"][0];
  CHECK(inst["primal"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(inst["dual"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(inst["gap"].get<double>() <= 1e-9);
  CHECK(report["pass"] == true);
}

TEST_CASE("failed assertions exit 1 and still write the report") {
  const fs::path dir = work("failing");
  const Result r = cli("run '" + fixture("failing_talagrand").string() + "'", dir, (dir / "out").string());
  CHECK(r.code == 1);
  const json report = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report["pass"] == false);
  CHECK(report["assertions"][0]["pass"] == false);
}

TEST_CASE("unwritable output is a runtime failure") {
  const fs::path dir = work("blocked");
  std::ofstream(dir / "blocker") << "file, not a directory";
  const Result r = cli("run '" + config("talagrand").string() + "'", dir, (dir / "blocker" / "sub").string());
  CHECK(r.code == 3);
}

TEST_CASE("reruns give byte-identical reports apart from the timestamp") {
  const fs::path dir = work("rerun");
  for (const char* name : {"no_map", "transitive_identity"}) {
    const fs::path a = dir / (std::string(name) + "_a"), b = dir / (std::string(name) + "_b");
    REQUIRE(cli("run '" + config(name).string() + "'", dir, a.string()).code == 0);
    REQUIRE(cli("run '" + config(name).string() + "'", dir, b.string()).code == 0);
    CHECK(without_timestamp(json::parse(slurp(a / "report.json"))).dump(2) ==
          without_timestamp(json::parse(slurp(b / "report.json"))).dump(2));
    CHECK(slurp(a / "data.csv") == slurp(b / "data.csv"));
  }
}

TEST_CASE("Gibbs runs persist samples with a sidecar") {
  const fs::path dir = work("gibbs");
  const Result r = cli("run '" + config("gibbs_free_small").string() + "'", dir, (dir / "out").string());
  CHECK(r.code == 0);
  const auto cols = seqot::io::read_columnar(dir / "out" / "samples.bin");
  CHECK(cols.names.size() == 5);
  CHECK(cols.columns[0].size() == 2000);
  const json side = seqot::io::read_json_file(dir / "out" / "samples.bin.json");
  CHECK(side["seed"] == 99);
  CHECK(side["config"]["experiment"] == "gibbs_cauchy");
  CHECK(side.contains("spec_hash"));
}
