#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seqot/io.hpp"
#include "seqot/svg.hpp"

namespace seqot::experiments {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class ExitCode : int { pass = 0, assertion_failed = 1, config_error = 2, runtime_failure = 3 };

struct RegistryEntry {
  std::string name;
  std::string summary;
  std::vector<std::string> operations;  ///< library operations the experiment exercises
  std::vector<std::string> params;      ///< accepted parameter keys
  bool always_stochastic = false;       ///< otherwise only with a "random" block
};

const std::vector<RegistryEntry>& registry();
const RegistryEntry* find_experiment(const std::string& name);

struct ExperimentConfig {
  std::string experiment;
  json params = json::object();
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir;
};

/// Strict parse: unknown keys, unknown experiments, missing seeds for
/// stochastic runs and malformed values raise io::ConfigError. A non-empty
/// `output_override` (the OUTPUT_DIR variable) replaces output_dir.
ExperimentConfig parse_config(const json& j, const std::string& output_override = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& output_override = {});

/// Config as recorded in reports: output_dir left out so that the report
/// does not depend on where it is written.
json canonical_config(const ExperimentConfig& c);

struct Assertion {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct HypothesisItem {
  std::string hypothesis;
  std::string description;
  bool ok = true;
  std::string detail;
};

struct Outcome {
  json results = json::object();
  std::vector<Assertion> assertions;
  std::vector<HypothesisItem> checklist;
  std::vector<std::string> csv_header;
  std::vector<std::vector<double>> csv_rows;
  svg::Plot plot;
  std::optional<LatticeSample> lattice;  ///< persisted as samples.bin
  std::optional<GibbsSpec> gibbs_spec;
  bool pass() const;
};

/// Hypothesis checks only. Throws ConfigError for malformed parameters and
/// HypothesisError or std::length_error for failed preconditions.
std::vector<HypothesisItem> validate(const ExperimentConfig& c);

/// Runs the experiment in memory.
Outcome run(const ExperimentConfig& c);

/// report.json document; `timestamp` is the only run-dependent field.
json make_report(const ExperimentConfig& c, const Outcome& o, const std::string& timestamp);

/// Runs and writes report.json, data.csv and plot.svg (plus samples.bin for
/// Gibbs runs that request it) atomically into output_dir.
Outcome run_to_directory(const ExperimentConfig& c);

/// Maps exceptions to exit codes: ConfigError, json errors, invalid_argument,
/// length_error and HypothesisError are configuration problems (2); anything
/// else is a runtime failure (3).
ExitCode classify_exception(const std::exception& e);

std::string utc_timestamp();

}  // namespace seqot::experiments
