#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqot/gibbs.hpp"
#include "seqot/invariance.hpp"
#include "seqot/measures.hpp"
#include "seqot/ot.hpp"

namespace seqot::io {

using json = nlohmann::json;

/// Malformed or unknown configuration content.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ConfigError naming the first key of `obj` outside `allowed`, or
/// when `obj` is not an object.
void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& context);

/// Typed member access with ConfigError on absence or type mismatch.
template <class T>
T get(const json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key)) throw ConfigError(context + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(context + ": key '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& context) {
  return obj.contains(key) ? get<T>(obj, key, context) : fallback;
}

// measures: {"dim": d, "points": [[...], ...], "weights": [...]}
json to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const json& j);

// couplings: {"source": measure, "target": measure, "triplets": [[i, j, w], ...]}
json to_json(const Coupling& c, double threshold = 0.0);
Coupling coupling_from_json(const json& j);

// groups: {"dim": d, "generators": [[1-based images], ...]}
json to_json(const GroupAction& g);
GroupAction group_from_json(const json& j, std::size_t max_size = GroupAction::kMaxSize);

// one-dimensional laws:
//   {"family": "gaussian", "mean": m, "sd": s}
//   {"family": "grid", "nodes": [...], "density": [...]}
//   {"family": "gaussian_mixture", "weights": [...], "means": [...], "sds": [...],
//    "lo": -10, "hi": 10, "nodes": 10001}
//   {"family": "discrete", "points": [...], "weights": [...]}
json to_json(const Marginal1D& m);
Marginal1D marginal_from_json(const json& j);

// Gibbs specifications: {"V_coeffs": [...], "W_coeffs": [[...], ...], "params": {...}}
json to_json(const GibbsSpec& s);
GibbsSpec gibbs_from_json(const json& j);

/// FNV-1a of the compact JSON dump, as 16 hex digits.
std::string content_hash(const json& j);

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::filesystem::path& path, const std::string& content);

json read_json_file(const std::filesystem::path& path);

/// CSV with a header row; numbers printed with 17 significant digits.
std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

/// Binary columnar file: "SEQOTCOL" magic, u32 version, u64 rows, u64 cols,
/// then per column a u32 name length and the name bytes, then each column's
/// rows as little-endian doubles. The sidecar <path>.json records the
/// format, the column names and `meta` (seed, config, spec hash).
void write_columnar(const std::filesystem::path& path, const std::vector<std::string>& names,
                    const std::vector<std::vector<double>>& columns, const json& meta);

struct Columnar {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
};
Columnar read_columnar(const std::filesystem::path& path);

/// Columns x_{-n}..x_n of a lattice sample with meta {seed, config, spec_hash}.
void write_lattice_sample(const std::filesystem::path& path, const LatticeSample& s, const GibbsSpec& spec,
                          const json& config);

}  // namespace seqot::io
