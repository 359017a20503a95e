#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "seqot/experiments.hpp"

namespace ex = seqot::experiments;

namespace {

std::string output_override() {
  const char* v = std::getenv("OUTPUT_DIR");
  return v ? v : "";
}

int fail(const std::exception& e) {
  const ex::ExitCode code = ex::classify_exception(e);
  std::cerr << (code == ex::ExitCode::config_error ? "config error: " : "runtime failure: ") << e.what() << "\n";
  return static_cast<int>(code);
}

void print_checklist(const std::vector<ex::HypothesisItem>& items) {
  for (const auto& h : items) {
    std::cout << "  [" << (h.ok ? "ok" : "FAIL") << "] " << h.hypothesis << ": " << h.description;
    if (!h.detail.empty()) std::cout << " (" << h.detail << ")";
    std::cout << "\n";
  }
}

int cmd_run(const std::string& path) {
  try {
    const ex::ExperimentConfig c = ex::load_config(path, output_override());
    const ex::Outcome o = ex::run_to_directory(c);
    for (const auto& a : o.assertions)
      std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << " (value " << a.value << ", threshold " << a.threshold
                << ")\n";
    std::cout << "report: " << (c.output_dir / "report.json").string() << "\n";
    return static_cast<int>(o.pass() ? ex::ExitCode::pass : ex::ExitCode::assertion_failed);
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int cmd_validate(const std::string& path) {
  try {
    const ex::ExperimentConfig c = ex::load_config(path, output_override());
    const auto items = ex::validate(c);
    std::cout << "ok: " << c.experiment << "\n";
    print_checklist(items);
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int cmd_list() {
  for (const auto& e : ex::registry()) {
    std::cout << e.name << (e.always_stochastic ? " (seed required)" : "") << "\n  " << e.summary << "\n  operations:";
    for (const auto& op : e.operations) std::cout << ' ' << op;
    std::cout << "\n  params:";
    for (const auto& p : e.params) std::cout << ' ' << p;
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal transport experiments on sequence spaces"};
  app.require_subcommand(1);
  std::string run_path, validate_path;
  auto* run = app.add_subcommand("run", "run an experiment and write report.json, data.csv and plot.svg");
  run->add_option("config", run_path, "experiment config (JSON)")->required();
  auto* val = app.add_subcommand("validate", "parse a config and check hypotheses without running");
  val->add_option("config", validate_path, "experiment config (JSON)")->required();
  auto* list = app.add_subcommand("list-experiments", "list the registered experiments");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ex::ExitCode::config_error);
  }
  if (*run) return cmd_run(run_path);
  if (*val) return cmd_validate(validate_path);
  if (*list) return cmd_list();
  return static_cast<int>(ex::ExitCode::config_error);
}
