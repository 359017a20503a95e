#include "seqot/io.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "seqot/stats.hpp"

namespace seqot::io {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'Q', 'O', 'T', 'C', 'O', 'L'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "columnar files are little-endian");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw std::runtime_error("columnar file truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::vector<double> doubles(const json& j, const char* key, const std::string& ctx) {
  return get<std::vector<double>>(j, key, ctx);
}

}  // namespace

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!obj.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

// ---------------------------------------------------------------------------
// measures and couplings

json to_json(const DiscreteMeasure& m) {
  json pts = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto p = m.point(i);
    pts.push_back(std::vector<double>(p.begin(), p.end()));
  }
  return json{{"dim", m.dim()}, {"points", pts}, {"weights", m.weights()}};
}

DiscreteMeasure measure_from_json(const json& j) {
  const std::string ctx = "measure";
  require_keys(j, {"dim", "points", "weights"}, ctx);
  const auto dim = get<std::size_t>(j, "dim", ctx);
  const auto pts = get<std::vector<std::vector<double>>>(j, "points", ctx);
  const auto w = doubles(j, "weights", ctx);
  if (pts.size() != w.size()) throw ConfigError("measure: points and weights differ in length");
  std::vector<double> coords;
  for (const auto& p : pts) {
    if (p.size() != dim) throw ConfigError("measure: point of the wrong dimension");
    coords.insert(coords.end(), p.begin(), p.end());
  }
  try {
    return DiscreteMeasure(dim, std::move(coords), w);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("measure: ") + e.what());
  }
}

json to_json(const Coupling& c, double threshold) {
  json t = json::array();
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j)
      if (c(i, j) > threshold) t.push_back(json::array({i, j, c(i, j)}));
  return json{{"source", to_json(c.source())}, {"target", to_json(c.target())}, {"triplets", t}};
}

Coupling coupling_from_json(const json& j) {
  const std::string ctx = "coupling";
  require_keys(j, {"source", "target", "triplets"}, ctx);
  DiscreteMeasure a = measure_from_json(j.at("source")), b = measure_from_json(j.at("target"));
  std::vector<double> w(a.size() * b.size(), 0.0);
  if (!j.contains("triplets") || !j.at("triplets").is_array()) throw ConfigError("coupling: triplets must be an array");
  for (const auto& t : j.at("triplets")) {
    if (!t.is_array() || t.size() != 3) throw ConfigError("coupling: triplets are [i, j, w]");
    const auto i = t[0].get<std::size_t>(), k = t[1].get<std::size_t>();
    if (i >= a.size() || k >= b.size()) throw ConfigError("coupling: triplet index out of range");
    w[i * b.size() + k] += t[2].get<double>();
  }
  try {
    return Coupling(std::move(a), std::move(b), std::move(w));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("coupling: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// groups

json to_json(const GroupAction& g) {
  json gens = json::array();
  for (const auto& p : g.generators()) {
    std::vector<std::size_t> one(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) one[i] = p[i] + 1;
    gens.push_back(one);
  }
  return json{{"dim", g.dim()}, {"generators", gens}};
}

GroupAction group_from_json(const json& j, std::size_t max_size) {
  const std::string ctx = "group";
  require_keys(j, {"dim", "generators"}, ctx);
  const auto dim = get<std::size_t>(j, "dim", ctx);
  const auto gens = get<std::vector<std::vector<std::size_t>>>(j, "generators", ctx);
  try {
    return closure_from_generators(dim, gens, max_size);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("group: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// one-dimensional laws

json to_json(const Marginal1D& m) {
  if (const auto* g = std::get_if<Gaussian1D>(&m)) return json{{"family", "gaussian"}, {"mean", g->mean}, {"sd", g->sd}};
  if (const auto* g = std::get_if<Grid1D>(&m)) return json{{"family", "grid"}, {"nodes", g->nodes()}, {"density", g->density()}};
  const auto& d = std::get<DiscreteMeasure>(m);
  return json{{"family", "discrete"}, {"points", d.coords()}, {"weights", d.weights()}};
}

Marginal1D marginal_from_json(const json& j) {
  const std::string ctx = "law";
  if (!j.is_object()) throw ConfigError("law: expected an object");
  const auto family = get<std::string>(j, "family", ctx);
  try {
    if (family == "gaussian") {
      require_keys(j, {"family", "mean", "sd"}, ctx);
      const double sd = get<double>(j, "sd", ctx);
      if (!(sd > 0.0)) throw ConfigError("law: sd must be positive");
      return Gaussian1D{get<double>(j, "mean", ctx), sd};
    }
    if (family == "grid") {
      require_keys(j, {"family", "nodes", "density"}, ctx);
      return Grid1D::normalized(doubles(j, "nodes", ctx), doubles(j, "density", ctx));
    }
    if (family == "gaussian_mixture") {
      require_keys(j, {"family", "weights", "means", "sds", "lo", "hi", "nodes"}, ctx);
      const auto w = doubles(j, "weights", ctx), mu = doubles(j, "means", ctx), sd = doubles(j, "sds", ctx);
      if (w.empty() || w.size() != mu.size() || w.size() != sd.size())
        throw ConfigError("law: mixture weights, means and sds must have one entry per component");
      for (std::size_t k = 0; k < w.size(); ++k)
        if (!(w[k] > 0.0) || !(sd[k] > 0.0)) throw ConfigError("law: mixture weights and sds must be positive");
      const double lo = get_or<double>(j, "lo", -10.0, ctx), hi = get_or<double>(j, "hi", 10.0, ctx);
      const auto nodes = get_or<std::size_t>(j, "nodes", 10001, ctx);
      return Grid1D::tabulate(
          [=](double x) {
            double f = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) f += w[k] * normal_pdf((x - mu[k]) / sd[k]) / sd[k];
            return f;
          },
          lo, hi, nodes);
    }
    if (family == "discrete") {
      require_keys(j, {"family", "points", "weights"}, ctx);
      return DiscreteMeasure(1, doubles(j, "points", ctx), doubles(j, "weights", ctx));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("law: ") + e.what());
  }
  throw ConfigError("law: unknown family '" + family + "'");
}

// ---------------------------------------------------------------------------
// Gibbs specifications

json to_json(const GibbsSpec& s) {
  json w = json::array();
  for (std::size_t i = 0; i <= s.W.degree; ++i) {
    std::vector<double> row(s.W.coeffs.begin() + static_cast<std::ptrdiff_t>(i * (s.W.degree + 1)),
                            s.W.coeffs.begin() + static_cast<std::ptrdiff_t>((i + 1) * (s.W.degree + 1)));
    w.push_back(row);
  }
  const GibbsParams& p = s.params;
  return json{{"V_coeffs", s.V.coeffs},
              {"W_coeffs", w},
              {"params", {{"J", p.J}, {"L", p.L}, {"N", p.N}, {"sigma", p.sigma}, {"A", p.A}, {"B", p.B}, {"C", p.C}}}};
}

GibbsSpec gibbs_from_json(const json& j) {
  const std::string ctx = "gibbs spec";
  require_keys(j, {"V_coeffs", "W_coeffs", "params"}, ctx);
  GibbsSpec s;
  s.V.coeffs = doubles(j, "V_coeffs", ctx);
  if (s.V.coeffs.empty()) throw ConfigError("gibbs spec: V_coeffs is empty");
  const auto w = get<std::vector<std::vector<double>>>(j, "W_coeffs", ctx);
  if (w.empty()) throw ConfigError("gibbs spec: W_coeffs is empty");
  s.W.degree = w.size() - 1;
  for (const auto& row : w) {
    if (row.size() != w.size()) throw ConfigError("gibbs spec: W_coeffs must be a square matrix");
    s.W.coeffs.insert(s.W.coeffs.end(), row.begin(), row.end());
  }
  const json& p = j.at("params");
  require_keys(p, {"J", "L", "N", "sigma", "A", "B", "C"}, "gibbs params");
  const std::string pc = "gibbs params";
  s.params = GibbsParams{get<double>(p, "J", pc), get<double>(p, "L", pc),     get<double>(p, "N", pc),
                         get<double>(p, "sigma", pc), get<double>(p, "A", pc), get<double>(p, "B", pc),
                         get<double>(p, "C", pc)};
  return s;
}

std::string content_hash(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, stats::fnv1a(j.dump()));
  return buf;
}

// ---------------------------------------------------------------------------
// files

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  char buf[32];
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw std::invalid_argument("to_csv: row width differs from header");
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (std::isnan(r[k]))
        std::snprintf(buf, sizeof buf, "nan");
      else
        std::snprintf(buf, sizeof buf, "%.17g", r[k]);
      out << (k ? "," : "") << buf;
    }
    out << '\n';
  }
  return out.str();
}

void write_columnar(const std::filesystem::path& path, const std::vector<std::string>& names,
                    const std::vector<std::vector<double>>& columns, const json& meta) {
  if (names.size() != columns.size()) throw std::invalid_argument("write_columnar: one name per column");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != rows) throw std::invalid_argument("write_columnar: columns differ in length");
  std::string bytes(kMagic, sizeof kMagic);
  put<std::uint32_t>(bytes, kVersion);
  put<std::uint64_t>(bytes, rows);
  put<std::uint64_t>(bytes, columns.size());
  for (const auto& n : names) {
    put<std::uint32_t>(bytes, static_cast<std::uint32_t>(n.size()));
    bytes += n;
  }
  for (const auto& c : columns)
    for (double v : c) put<double>(bytes, v);
  write_atomic(path, bytes);

  json side = meta;
  side["format"] = "seqot-columnar";
  side["version"] = kVersion;
  side["rows"] = rows;
  side["columns"] = names;
  std::filesystem::path sp = path;
  sp += ".json";
  write_atomic(sp, side.dump(2) + "\n");
}

Columnar read_columnar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw std::runtime_error(path.string() + ": not a columnar file");
  std::size_t pos = sizeof kMagic;
  if (take<std::uint32_t>(bytes, pos) != kVersion) throw std::runtime_error(path.string() + ": unsupported version");
  const auto rows = take<std::uint64_t>(bytes, pos), cols = take<std::uint64_t>(bytes, pos);
  Columnar c;
  for (std::uint64_t k = 0; k < cols; ++k) {
    const auto len = take<std::uint32_t>(bytes, pos);
    if (pos + len > bytes.size()) throw std::runtime_error("columnar file truncated");
    c.names.emplace_back(bytes.data() + pos, len);
    pos += len;
  }
  c.columns.assign(cols, std::vector<double>(rows));
  for (auto& col : c.columns)
    for (auto& v : col) v = take<double>(bytes, pos);
  if (pos != bytes.size()) throw std::runtime_error(path.string() + ": trailing bytes");
  return c;
}

void write_lattice_sample(const std::filesystem::path& path, const LatticeSample& s, const GibbsSpec& spec,
                          const json& config) {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  for (std::size_t k = 0; k < s.sites; ++k) {
    names.push_back("x_" + std::to_string(static_cast<long>(k) - static_cast<long>(s.n)));
    cols.push_back(s.column(k));
  }
  const json spec_json = to_json(spec);
  const json meta{{"seed", s.seed},
                  {"config", config},
                  {"spec", spec_json},
                  {"spec_hash", content_hash(spec_json)},
                  {"n", s.n},
                  {"burn_in", s.burn_in},
                  {"thinning", s.thinning},
                  {"chain_sizes", s.chain_sizes}};
  write_columnar(path, names, cols, meta);
}

}  // namespace seqot::io
