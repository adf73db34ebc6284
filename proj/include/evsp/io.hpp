#pragma once

// File formats: binary ensemble tensors, mask CSV, model JSON, synthetic
// generator specs and CSV report tables.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"  // vendored nlohmann/json

#include "coherence.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "grid.hpp"
#include "simulation.hpp"
#include "spectral.hpp"
#include "temporal.hpp"
#include "trend.hpp"

namespace evsp {

static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");

inline constexpr std::array<char, 4> tensor_magic{'E', 'V', 'S', 'P'};
inline constexpr std::uint32_t tensor_version = 1;
inline constexpr int model_schema_version = 1;

// ---------------------------------------------------------------------------
// Tensor files

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof v));
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open '" + path.string() + "' for reading");
  return is;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace detail

inline void write_tensor(const EnsembleField& field, const std::filesystem::path& path) {
  const auto& g = field.grid;
  auto os = detail::open_out(path);
  os.write(tensor_magic.data(), tensor_magic.size());
  detail::put(os, tensor_version);
  for (std::uint64_t d : {g.M, g.N, g.K, g.R}) detail::put(os, d);
  for (double lat : g.latitudes) detail::put(os, lat);
  const auto& v = field.values.data();
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!os) throw io_error("write failed for '" + path.string() + "'");
}

inline EnsembleField read_tensor(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != tensor_magic)
    throw format_error("format: '" + path.string() + "' is not an EVSP tensor (bad magic)");
  std::uint32_t version = 0;
  if (!detail::get(is, version)) throw format_error("format: truncated header in '" + path.string() + "'");
  if (version != tensor_version)
    throw format_error("format: unsupported tensor version " + std::to_string(version) + " in '" + path.string() + "'");
  std::array<std::uint64_t, 4> dims{};
  for (auto& d : dims)
    if (!detail::get(is, d)) throw format_error("format: truncated header in '" + path.string() + "'");

  // Dimension product must fit both in memory indexing and in the file.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / sizeof(double);
  std::uint64_t count = 1;
  for (auto d : dims) {
    if (d == 0) throw validation_error("tensor dims must be positive");
    if (count > limit / d) throw dimension_overflow_error("dimension overflow: M*N*K*R too large");
    count *= d;
  }
  const std::uint64_t M = dims[0];

  const auto header_end = static_cast<std::uint64_t>(is.tellg());
  is.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(is.tellg());
  is.seekg(static_cast<std::streamoff>(header_end));
  if (M > limit - count) throw dimension_overflow_error("dimension overflow: payload too large");
  const std::uint64_t expected = header_end + (M + count) * sizeof(double);
  if (file_size != expected)
    throw payload_length_error("payload length: expected " + std::to_string(expected) + " bytes, file has " +
                               std::to_string(file_size));

  SphereGrid grid{dims[0], dims[1], dims[2], dims[3], std::vector<double>(M)};
  is.read(reinterpret_cast<char*>(grid.latitudes.data()), static_cast<std::streamsize>(M * sizeof(double)));
  Tensor4 values(grid.M, grid.N, grid.K, grid.R);
  auto& data = values.data();
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw io_error("read failed for '" + path.string() + "'");
  return EnsembleField(std::move(grid), std::move(values));
}

// ---------------------------------------------------------------------------
// Mask CSV: M lines of N comma-separated 0/1 values, south to north.

inline LandMask parse_mask_csv(std::istream& is) {
  std::vector<std::uint8_t> cells;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t"), e = cell.find_last_not_of(" \t");
      const std::string token = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      if (token != "0" && token != "1")
        throw format_error("mask: row " + std::to_string(rows) + " has entry '" + token + "' (expected 0 or 1)");
      cells.push_back(token == "1");
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw format_error("mask: row " + std::to_string(rows) + " has " + std::to_string(count) +
                                          " entries, expected " + std::to_string(cols));
    ++rows;
  }
  if (rows == 0) throw format_error("mask: empty file");
  return LandMask(rows, cols, std::move(cells));
}

inline LandMask read_mask_csv(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  return parse_mask_csv(is);
}

inline void write_mask_csv(const LandMask& mask, const std::filesystem::path& path) {
  auto os = detail::open_out(path);
  for (std::size_t m = 0; m < mask.M(); ++m) {
    for (std::size_t n = 0; n < mask.N(); ++n) os << (n ? "," : "") << static_cast<int>(mask(m, n));
    os << '\n';
  }
  if (!os) throw io_error("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// CSV tables

/// Shortest round-trip decimal with '.' separator regardless of locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  void write(const std::filesystem::path& path) const {
    auto os = detail::open_out(path);
    os << str();
    if (!os) throw io_error("write failed for '" + path.string() + "'");
  }
};

// ---------------------------------------------------------------------------
// Model files

struct ModelDocument {
  FittedModel model;
  std::optional<TrendField> trend;  // reconstructed under `trend_storage`
  TrendStorage trend_storage;
};

namespace detail {

using nlohmann::json;

inline double number(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw format_error("model: expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

inline json number_json(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

inline json numbers_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_json(x));
  return a;
}

inline std::vector<double> numbers(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number(x));
  return v;
}

inline json matern_json(const MaternSpectrumParams& p) { return {{"phi", p.phi}, {"alpha", p.alpha}, {"nu", p.nu}}; }
inline MaternSpectrumParams matern_from(const json& j) {
  return {number(j.at("phi")), number(j.at("alpha")), number(j.at("nu"))};
}
inline json pair_json(const CoherencePair& p) { return {{"xi", p.xi}, {"tau", p.tau}}; }
inline CoherencePair pair_from(const json& j) { return {number(j.at("xi")), number(j.at("tau"))}; }

inline json coherence_json(const LatitudeCoherenceProfile& c) {
  json tropical = json::array();
  for (const auto& [m, p] : c.tropical) {
    auto e = pair_json(p);
    e["band"] = m;
    tropical.push_back(e);
  }
  return {{"mode", c.mode == CoherenceMode::stationary ? "stationary" : "nonstationary"},
          {"global", pair_json(c.global)},
          {"tropical", tropical},
          {"tropic_bound_deg", c.tropic_bound_deg}};
}

inline LatitudeCoherenceProfile coherence_from(const json& j) {
  LatitudeCoherenceProfile c;
  const auto mode = j.at("mode").get<std::string>();
  if (mode == "stationary") c.mode = CoherenceMode::stationary;
  else if (mode == "nonstationary") c.mode = CoherenceMode::nonstationary;
  else throw format_error("model: unknown coherence mode '" + mode + "'");
  c.global = pair_from(j.at("global"));
  const json tropical = j.value("tropical", json::array());
  for (const auto& e : tropical) c.tropical[e.at("band").get<std::size_t>()] = pair_from(e);
  c.tropic_bound_deg = number(j.value("tropic_bound_deg", json(23.0)));
  return c;
}

inline json report_json(const FitReport& r) {
  json pairwise = json::array();
  for (const auto& p : r.pairwise) pairwise.push_back(pair_json(p));
  json nested = json::object();
  for (const auto& [k, v] : r.nested_negloglik) nested[k] = number_json(v);
  return {{"step1_negloglik", number_json(r.step1_negloglik)},
          {"step2_negloglik", number_json(r.step2_negloglik)},
          {"step3_negloglik", number_json(r.step3_negloglik)},
          {"band_negloglik_ax", numbers_json(r.band_negloglik_ax)},
          {"band_negloglik_ev", numbers_json(r.band_negloglik_ev)},
          {"pairwise", pairwise},
          {"nested_negloglik", nested},
          {"warnings", r.warnings}};
}

inline FitReport report_from(const json& j) {
  FitReport r;
  r.step1_negloglik = number(j.at("step1_negloglik"));
  r.step2_negloglik = number(j.at("step2_negloglik"));
  r.step3_negloglik = number(j.at("step3_negloglik"));
  r.band_negloglik_ax = numbers(j.value("band_negloglik_ax", json::array()));
  r.band_negloglik_ev = numbers(j.value("band_negloglik_ev", json::array()));
  const json pairwise = j.value("pairwise", json::array());
  for (const auto& p : pairwise) r.pairwise.push_back(pair_from(p));
  const json nested = j.value("nested_negloglik", json::object());
  for (const auto& [k, v] : nested.items()) r.nested_negloglik[k] = number(v);
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

}  // namespace detail

inline nlohmann::json model_to_json(const ModelDocument& doc) {
  using nlohmann::json;
  const auto& model = doc.model;
  const auto& g = model.grid;
  json mask = json::array();
  for (std::size_t m = 0; m < model.mask.M(); ++m) {
    std::string row;
    for (std::size_t n = 0; n < model.mask.N(); ++n) row += model.mask(m, n) ? '1' : '0';
    mask.push_back(row);
  }
  std::vector<double> phi1, phi2, sigma;
  for (const auto& s : model.temporal.sites) {
    phi1.push_back(s.phi1);
    phi2.push_back(s.phi2);
    sigma.push_back(s.sigma);
  }
  json bands = json::array();
  for (const auto& b : model.bands)
    bands.push_back({{"land", detail::matern_json(b.land)},
                     {"ocean", detail::matern_json(b.ocean)},
                     {"taper", {{"g", b.taper.g}, {"gamma", b.taper.gamma}}}});
  json j = {{"schema", "evsp-model"},
            {"schema_version", model_schema_version},
            {"variant", to_string(model.variant)},
            {"grid", {{"M", g.M}, {"N", g.N}, {"K", g.K}, {"R", g.R}, {"latitudes", g.latitudes}}},
            {"mask", mask},
            {"temporal", {{"phi1", phi1}, {"phi2", phi2}, {"sigma", sigma}}},
            {"bands", bands},
            {"coherence", detail::coherence_json(model.coherence)},
            {"fit_report", detail::report_json(model.report)}};
  if (doc.trend) {
    const auto& t = doc.trend->values;
    const auto& st = doc.trend_storage;
    std::vector<std::size_t> pos;
    if (st.policy == TrendPolicy::store_full) {
      for (std::size_t k = 0; k < t.K(); ++k) pos.push_back(k);
    } else {
      pos = knot_positions(t.K(), st.knots);
    }
    std::vector<double> values;
    for (std::size_t m = 0; m < t.M(); ++m)
      for (std::size_t n = 0; n < t.N(); ++n)
        for (auto k : pos) values.push_back(t(m, n, k));
    j["trend"] = {{"policy", to_string(st.policy)}, {"knots", pos}, {"K", t.K()}, {"lambda", doc.trend->lambda}, {"values", values}};
  }
  return j;
}

inline ModelDocument model_from_json(const nlohmann::json& j) {
  ModelDocument doc;
  try {
    if (j.value("schema", std::string{}) != "evsp-model") throw format_error("model: not an evsp model document");
    const int version = j.at("schema_version").get<int>();
    if (version != model_schema_version)
      throw format_error("model: unsupported schema version " + std::to_string(version));
    auto& model = doc.model;
    model.variant = parse_variant(j.at("variant").get<std::string>());
    const auto& g = j.at("grid");
    model.grid = {g.at("M").get<std::size_t>(), g.at("N").get<std::size_t>(), g.at("K").get<std::size_t>(),
                  g.at("R").get<std::size_t>(), detail::numbers(g.at("latitudes"))};
    model.grid.validate();
    const std::size_t M = model.grid.M, N = model.grid.N;

    std::vector<std::uint8_t> cells;
    for (const auto& row : j.at("mask")) {
      const auto s = row.get<std::string>();
      if (s.size() != N) throw format_error("model: mask row length differs from N");
      for (char c : s) {
        if (c != '0' && c != '1') throw format_error("model: mask rows must contain only 0 and 1");
        cells.push_back(c == '1');
      }
    }
    model.mask = LandMask(M, N, std::move(cells));

    const auto& t = j.at("temporal");
    const auto phi1 = detail::numbers(t.at("phi1")), phi2 = detail::numbers(t.at("phi2")), sigma = detail::numbers(t.at("sigma"));
    if (phi1.size() != M * N || phi2.size() != M * N || sigma.size() != M * N)
      throw format_error("model: temporal arrays must have M*N entries");
    model.temporal = TemporalParams(M, N);
    for (std::size_t i = 0; i < M * N; ++i) model.temporal.sites[i] = {phi1[i], phi2[i], sigma[i]};
    model.temporal.validate();

    for (const auto& b : j.at("bands")) {
      BandSpectralParams p;
      p.land = detail::matern_from(b.at("land"));
      p.ocean = detail::matern_from(b.at("ocean"));
      p.taper = {b.at("taper").at("g").get<int>(), detail::number(b.at("taper").at("gamma"))};
      p.validate(N);
      model.bands.push_back(p);
    }
    if (model.variant != Variant::ind && model.bands.size() != M) throw format_error("model: expected one band entry per latitude");
    model.coherence = detail::coherence_from(j.at("coherence"));
    model.coherence.validate();
    model.report = detail::report_from(j.at("fit_report"));

    if (j.contains("trend")) {
      const auto& tj = j.at("trend");
      const std::size_t K = tj.at("K").get<std::size_t>();
      const auto pos = tj.at("knots").get<std::vector<std::size_t>>();
      const auto values = detail::numbers(tj.at("values"));
      if (values.size() != M * N * pos.size()) throw format_error("model: trend value count mismatch");
      for (auto k : pos)
        if (k >= K) throw format_error("model: trend knot outside 0..K-1");
      doc.trend_storage = parse_trend_storage(tj.at("policy").get<std::string>());
      if (doc.trend_storage.policy == TrendPolicy::store_spline_knots) {
        doc.trend_storage.knots = pos.size();
        if (pos != knot_positions(K, pos.size())) throw format_error("model: trend knots are not evenly placed");
      } else if (pos.size() != K) {
        throw format_error("model: full trend needs K values per site");
      }
      TrendField trend{Tensor3(M, N, K), detail::number(tj.at("lambda"))};
      std::vector<double> y(pos.size());
      for (std::size_t m = 0, i = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) {
          for (auto& v : y) v = values[i++];
          if (doc.trend_storage.policy == TrendPolicy::store_full) {
            for (std::size_t k = 0; k < K; ++k) trend.values(m, n, k) = y[k];
          } else {
            const auto curve = natural_spline(pos, y, K);
            for (std::size_t k = 0; k < K; ++k) trend.values(m, n, k) = curve[k];
          }
        }
      doc.trend = std::move(trend);
    }
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("model: ") + e.what());
  }
  return doc;
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  auto os = detail::open_out(path);
  os << j.dump(2) << '\n';
  if (!os) throw io_error("write failed for '" + path.string() + "'");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw format_error("'" + path.string() + "': " + e.what());
  }
}

inline void write_model(const ModelDocument& doc, const std::filesystem::path& path) { write_json(model_to_json(doc), path); }
inline ModelDocument read_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// Fit configuration files

/// Optional JSON overrides, e.g. {"restarts": 3, "g_min": -2, "optimizer": {"max_evaluations": 2000}}.
inline FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base = {}) {
  try {
    if (j.contains("variant")) base.variant = parse_variant(j.at("variant").get<std::string>());
    base.restarts = j.value("restarts", base.restarts);
    base.g_min = j.value("g_min", base.g_min);
    base.g_max = j.value("g_max", base.g_max);
    base.tropic_bound_deg = j.value("tropic_bound_deg", base.tropic_bound_deg);
    base.workers = j.value("threads", base.workers);
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      base.optimizer.f_tol = o.value("f_tol", base.optimizer.f_tol);
      base.optimizer.x_tol = o.value("x_tol", base.optimizer.x_tol);
      base.optimizer.max_evaluations = o.value("max_evaluations", base.optimizer.max_evaluations);
      base.optimizer.initial_step = o.value("initial_step", base.optimizer.initial_step);
    }
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("fit config: ") + e.what());
  }
  return base;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticRegime {
  MaternSpectrumParams spectrum;  // phi <= 0 means "scale to unit variance"
  Ar2Site temporal;
};

struct SyntheticSpec {
  std::size_t M = 12, N = 48, K = 60, R = 4;
  double south_deg = -77.0, north_deg = 77.0;
  /// Land block [offset + shift * m, offset + shift * m + width) per band.
  std::size_t land_width = 16, land_offset = 4, land_shift = 2;
  SyntheticRegime land{{0.0, 0.5, 0.25}, {0.3, 0.1, 1.0}};
  SyntheticRegime ocean{{0.0, 0.5, 1.5}, {0.6, -0.15, 1.0}};
  TaperParams taper{0, 0.0};  // gamma <= 0: four grid spacings, at most pi
  CoherencePair coherence{0.7, 0.5};
  std::map<std::size_t, CoherencePair> tropical;  // non-empty: ev-nst truth
  double trend_mean = 10.0, trend_lat_amplitude = 15.0, trend_slope = 1.0;
  double noise_scale = 1.0;
  std::size_t burn_in = 200;
  std::uint64_t seed = 1;
};

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  try {
    auto regime = [&](const char* key, SyntheticRegime& r) {
      if (!j.contains(key)) return;
      const auto& e = j.at(key);
      r.spectrum.phi = e.value("phi", r.spectrum.phi);
      r.spectrum.alpha = e.value("alpha", r.spectrum.alpha);
      r.spectrum.nu = e.value("nu", r.spectrum.nu);
      r.temporal.phi1 = e.value("phi1", r.temporal.phi1);
      r.temporal.phi2 = e.value("phi2", r.temporal.phi2);
      r.temporal.sigma = e.value("sigma", r.temporal.sigma);
    };
    s.M = j.value("M", s.M);
    s.N = j.value("N", s.N);
    s.K = j.value("K", s.K);
    s.R = j.value("R", s.R);
    s.south_deg = j.value("south_deg", s.south_deg);
    s.north_deg = j.value("north_deg", s.north_deg);
    s.land_width = j.value("land_width", s.land_width);
    s.land_offset = j.value("land_offset", s.land_offset);
    s.land_shift = j.value("land_shift", s.land_shift);
    regime("land", s.land);
    regime("ocean", s.ocean);
    if (j.contains("taper")) s.taper = {j["taper"].value("g", 0), j["taper"].value("gamma", 0.0)};
    if (j.contains("coherence")) s.coherence = {j["coherence"].value("xi", s.coherence.xi), j["coherence"].value("tau", s.coherence.tau)};
    const nlohmann::json tropical = j.value("tropical", nlohmann::json::array());
    for (const auto& e : tropical)
      s.tropical[e.at("band").get<std::size_t>()] = {e.at("xi").get<double>(), e.at("tau").get<double>()};
    if (j.contains("trend")) {
      s.trend_mean = j["trend"].value("mean", s.trend_mean);
      s.trend_lat_amplitude = j["trend"].value("lat_amplitude", s.trend_lat_amplitude);
      s.trend_slope = j["trend"].value("slope", s.trend_slope);
    }
    s.noise_scale = j.value("noise_scale", s.noise_scale);
    s.burn_in = j.value("burn_in", s.burn_in);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("synthetic spec: ") + e.what());
  }
  if (s.M < 1 || s.N < 4 || s.K < 1 || s.R < 1) throw validation_error("synthetic spec: dimensions too small");
  if (s.land_width > s.N) throw validation_error("synthetic spec: land_width exceeds N");
  if (!(s.noise_scale >= 0.0)) throw validation_error("synthetic spec: noise_scale must be nonnegative");
  return s;
}

struct SyntheticTruth {
  FittedModel model;
  TrendField trend;
};

/// Matern amplitude giving sum_c f(c) = 1, i.e. unit marginal variance.
inline double unit_variance_phi(const MaternSpectrumParams& p, std::size_t N) {
  MaternSpectrumParams q = p;
  q.phi = 1.0;
  double total = 0.0;
  for (std::size_t c = 0; c < N; ++c) total += matern_like_spectrum(c, q, N);
  return 1.0 / total;
}

inline SyntheticTruth synthetic_truth(const SyntheticSpec& spec) {
  const std::size_t M = spec.M, N = spec.N, K = spec.K;
  SyntheticTruth out;
  auto& model = out.model;
  model.grid = {M, N, K, spec.R, SphereGrid::even_latitudes(M, spec.south_deg, spec.north_deg)};
  model.grid.validate();

  mask_pattern::Blocks blocks;
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t b = (spec.land_offset + spec.land_shift * m) % N;
    blocks.intervals.push_back({{b, (b + spec.land_width) % N}});
  }
  if (spec.land_width == 0) model.mask = synthetic_mask(M, N, mask_pattern::AllOcean{});
  else if (spec.land_width == N) model.mask = synthetic_mask(M, N, mask_pattern::AllLand{});
  else model.mask = synthetic_mask(M, N, blocks);

  auto spectrum = [&](MaternSpectrumParams p) {
    if (!(p.phi > 0.0)) p.phi = unit_variance_phi(p, N);
    return p;
  };
  BandSpectralParams band{spectrum(spec.land.spectrum), spectrum(spec.ocean.spectrum), spec.taper};
  if (!(band.taper.gamma > 0.0)) band.taper.gamma = std::min(4.0 * model.grid.spacing(), std::numbers::pi);
  band.validate(N);
  model.bands.assign(M, band);

  model.temporal = TemporalParams(M, N);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n) model.temporal.at(m, n) = model.mask(m, n) ? spec.land.temporal : spec.ocean.temporal;
  model.temporal.validate();

  model.coherence.global = spec.coherence;
  model.coherence.tropical = spec.tropical;
  model.coherence.mode = spec.tropical.empty() ? CoherenceMode::stationary : CoherenceMode::nonstationary;
  model.coherence.validate();
  model.variant = spec.tropical.empty() ? Variant::ev_st : Variant::ev_nst;

  out.trend.values = Tensor3(M, N, K);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < K; ++k)
        out.trend.values(m, n, k) = spec.trend_mean + spec.trend_lat_amplitude * std::cos(model.grid.latitudes[m]) +
                                    spec.trend_slope * (K > 1 ? static_cast<double>(k) / static_cast<double>(K - 1) : 0.0);
  return out;
}

/// Simulated ensemble for `spec`, with realizations drawn from `seed`.
inline EnsembleField synthetic_ensemble(const SyntheticSpec& spec, const SyntheticTruth& truth, std::uint64_t seed,
                                        std::size_t workers = 0) {
  SimulationOptions opt;
  opt.burn_in = spec.burn_in;
  opt.noise_scale = spec.noise_scale;
  opt.workers = workers;
  return simulate_surrogates(truth.model, truth.trend, spec.R, seed, opt).field;
}

/// Writes data.evsp, mask.csv and truth.json into `dir`.
inline void gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create '" + dir.string() + "': " + ec.message());
  const auto truth = synthetic_truth(spec);
  write_tensor(synthetic_ensemble(spec, truth, seed), dir / "data.evsp");
  write_mask_csv(truth.model.mask, dir / "mask.csv");
  write_model({truth.model, truth.trend, TrendStorage{}}, dir / "truth.json");
}

}  // namespace evsp
