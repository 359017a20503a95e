#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "seqot/io.hpp"
#include "seqot/svg.hpp"

using namespace seqot;
using namespace seqot::io;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "seqot_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("measure JSON round trip") {
  const DiscreteMeasure m(2, {0.0, 1.0, 2.5, -1.0}, {0.25, 0.75});
  const json j = to_json(m);
  CHECK(j["dim"] == 2);
  CHECK(j["points"].size() == 2);
  const DiscreteMeasure back = measure_from_json(j);
  CHECK(back.coords() == m.coords());
  CHECK(back.weights() == m.weights());
}

TEST_CASE("measure JSON rejects malformed input") {
  CHECK_THROWS_AS(measure_from_json(json{{"dim", 1}, {"points", {{0.0}}}, {"weights", {1.0}}, {"extra", 1}}),
                  ConfigError);
  CHECK_THROWS_AS(measure_from_json(json{{"dim", 2}, {"points", {{0.0}}}, {"weights", {1.0}}}), ConfigError);
  CHECK_THROWS_AS(measure_from_json(json{{"dim", 1}, {"points", {{0.0}, {1.0}}}, {"weights", {1.0}}}), ConfigError);
  CHECK_THROWS_AS(measure_from_json(json{{"dim", 1}, {"points", {{0.0}}}, {"weights", {-1.0}}}), ConfigError);
  CHECK_THROWS_AS(measure_from_json(json{{"dim", 1}, {"points", "x"}, {"weights", {1.0}}}), ConfigError);
}

TEST_CASE("coupling triplets round trip") {
  const DiscreteMeasure a(1, {0.0, 1.0}, {0.5, 0.5}), b(1, {2.0, 3.0}, {0.5, 0.5});
  const Coupling c(a, b, {0.5, 0.0, 0.0, 0.5});
  const json j = to_json(c);
  CHECK(j["triplets"].size() == 2);
  const Coupling back = coupling_from_json(j);
  CHECK(back.weights() == c.weights());
  json bad = j;
  bad["triplets"].push_back({5, 0, 0.1});
  CHECK_THROWS_AS(coupling_from_json(bad), ConfigError);
  json off = j;
  off["triplets"] = json::array({json::array({0, 0, 1.0})});
  CHECK_THROWS_AS(coupling_from_json(off), ConfigError);
}

TEST_CASE("groups use 1-based generators") {
  const GroupAction g = group_from_json(json{{"dim", 3}, {"generators", {{2, 3, 1}}}});
  CHECK(g.order() == 3);
  const json back = to_json(g);
  CHECK(back["generators"][0] == json::array({2, 3, 1}));
  CHECK_THROWS_AS(group_from_json(json{{"dim", 3}, {"generators", {{0, 1, 2}}}}), ConfigError);
  CHECK_THROWS_AS(group_from_json(json{{"dim", 3}, {"generators", {{1, 1, 2}}}}), ConfigError);
  CHECK_THROWS_AS(group_from_json(json{{"dim", 5}, {"generators", {{2, 3, 4, 5, 1}, {2, 1, 3, 4, 5}}}}, 100),
                  std::length_error);
}

TEST_CASE("laws parse every family") {
  const Marginal1D g = marginal_from_json(json{{"family", "gaussian"}, {"mean", 1.0}, {"sd", 2.0}});
  REQUIRE(std::holds_alternative<Gaussian1D>(g));
  CHECK(std::get<Gaussian1D>(g).sd == 2.0);
  const Marginal1D mix = marginal_from_json(json{{"family", "gaussian_mixture"},
                                                 {"weights", {0.5, 0.5}},
                                                 {"means", {-1.0, 1.0}},
                                                 {"sds", {1.0, 1.0}},
                                                 {"nodes", 2001}});
  REQUIRE(std::holds_alternative<Grid1D>(mix));
  CHECK(std::get<Grid1D>(mix).size() == 2001);
  CHECK(std::get<Grid1D>(mix).expectation([](double x) { return x * x; }) == doctest::Approx(2.0).epsilon(1e-6));
  const Marginal1D d = marginal_from_json(json{{"family", "discrete"}, {"points", {0.0, 1.0}}, {"weights", {1, 3}}});
  REQUIRE(std::holds_alternative<DiscreteMeasure>(d));
  CHECK(std::get<DiscreteMeasure>(d).weight(1) == doctest::Approx(0.75));
  CHECK(to_json(g)["family"] == "gaussian");
  CHECK_THROWS_AS(marginal_from_json(json{{"family", "cauchy"}}), ConfigError);
  CHECK_THROWS_AS(marginal_from_json(json{{"family", "gaussian"}, {"mean", 0.0}, {"sd", 0.0}}), ConfigError);
  CHECK_THROWS_AS(marginal_from_json(json{{"family", "gaussian"}, {"mean", 0.0}, {"sd", 1.0}, {"x", 1}}),
                  ConfigError);
}

TEST_CASE("Gibbs specs round trip") {
  const GibbsSpec s = GibbsSpec::quartic(0.1);
  const json j = to_json(s);
  CHECK(j["W_coeffs"].size() == s.W.degree + 1);
  const GibbsSpec back = gibbs_from_json(j);
  CHECK(back.V.coeffs == s.V.coeffs);
  CHECK(back.W.coeffs == s.W.coeffs);
  CHECK(back.params.J == s.params.J);
  CHECK(back.params.sigma == s.params.sigma);
  json ragged = j;
  ragged["W_coeffs"] = json::array({json::array({0.0, 1.0}), json::array({0.0})});
  CHECK_THROWS_AS(gibbs_from_json(ragged), ConfigError);
  json missing = j;
  missing["params"].erase("C");
  CHECK_THROWS_AS(gibbs_from_json(missing), ConfigError);
}

TEST_CASE("content hash is stable and sensitive") {
  const json a{{"x", 1}, {"y", {1, 2}}};
  CHECK(content_hash(a) == content_hash(json::parse(a.dump())));
  CHECK(content_hash(a).size() == 16);
  CHECK(content_hash(a) != content_hash(json{{"x", 2}, {"y", {1, 2}}}));
}

TEST_CASE("atomic writes leave no temporary files") {
  const auto p = scratch("nested/dir/file.txt");
  write_atomic(p, "first");
  write_atomic(p, "second");
  CHECK(slurp(p) == "second");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(p.parent_path())) files += e.is_regular_file();
  CHECK(files == 1);
}

TEST_CASE("read_json_file reports parse errors as config errors") {
  const auto p = scratch("broken.json");
  write_atomic(p, "{\"a\": ");
  CHECK_THROWS_AS(read_json_file(p), ConfigError);
  CHECK_THROWS_AS(read_json_file(scratch("does_not_exist.json")), ConfigError);
}

TEST_CASE("csv output") {
  const std::string csv = to_csv({"a", "b"}, {{1.0, 0.1}, {std::nan(""), -2.0}});
  CHECK(csv == "a,b\n1,0.10000000000000001\nnan,-2\n");
  CHECK_THROWS_AS(to_csv({"a"}, {{1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("columnar files round trip bitwise") {
  const auto p = scratch("cols.bin");
  const std::vector<std::vector<double>> cols{{1.0, -0.0, 3.5e-300}, {std::nextafter(1.0, 2.0), 2.0, -7.25}};
  write_columnar(p, {"x_-1", "x_0"}, cols, json{{"seed", 42}});
  const Columnar c = read_columnar(p);
  CHECK(c.names == std::vector<std::string>{"x_-1", "x_0"});
  REQUIRE(c.columns.size() == 2);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::bit_cast<std::uint64_t>(c.columns[k][i]) == std::bit_cast<std::uint64_t>(cols[k][i]));
  const json side = read_json_file(p.string() + ".json");
  CHECK(side["seed"] == 42);
  CHECK(side["rows"] == 3);
  CHECK(side["format"] == "seqot-columnar");
  CHECK_THROWS_AS(write_columnar(p, {"a"}, {{1.0}, {2.0}}, json::object()), std::invalid_argument);
  write_atomic(scratch("junk.bin"), "not columnar");
  CHECK_THROWS(read_columnar(scratch("junk.bin")));
}

TEST_CASE("lattice samples persist with seed and spec hash") {
  LatticeSample s;
  s.n = 1;
  s.sites = 3;
  s.states = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  s.chain_sizes = {2};
  s.seed = 9;
  const GibbsSpec spec = GibbsSpec::quartic(0.0);
  const auto p = scratch("lattice.bin");
  write_lattice_sample(p, s, spec, json{{"experiment", "gibbs_cauchy"}});
  const Columnar c = read_columnar(p);
  CHECK(c.names == std::vector<std::string>{"x_-1", "x_0", "x_1"});
  CHECK(c.columns[1] == std::vector<double>{2.0, 5.0});
  const json side = read_json_file(p.string() + ".json");
  CHECK(side["seed"] == 9);
  CHECK(side["spec_hash"] == content_hash(to_json(spec)));
  CHECK(side["config"]["experiment"] == "gibbs_cauchy");
}

TEST_CASE("svg emitter draws series, legend and escapes text") {
  svg::Plot p{"a < b & c", "x", "y", {{"line", {0.0, 1.0, 2.0}, {1.0, 4.0, 9.0}, true},
                                      {"dots", {0.5}, {std::nan("")}, false}}};
  const std::string out = svg::render(p);
  CHECK(out.rfind("<svg", 0) == 0);
  CHECK(out.find("</svg>") != std::string::npos);
  CHECK(out.find("<polyline") != std::string::npos);
  CHECK(out.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(out.find(">dots<") != std::string::npos);
  CHECK(out.find("nan") == std::string::npos);
  CHECK(svg::render(svg::Plot{}).find("</svg>") != std::string::npos);
}
