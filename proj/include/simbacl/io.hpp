#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "simbacl/covariates.hpp"
#include "simbacl/error.hpp"
#include "simbacl/filter.hpp"
#include "simbacl/linalg.hpp"
#include "simbacl/models/seir.hpp"
#include "simbacl/models/sinr.hpp"
#include "simbacl/models/sis.hpp"
#include "simbacl/models/spatial_sis.hpp"
#include "simbacl/simulate.hpp"

namespace simbacl {

inline constexpr const char* kVersion = "0.1.0";

// --- low-level CSV ----------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": cannot parse number '" + s + "'");
  }
}

}  // namespace detail

// --- observations and trajectories ------------------------------------------

/// T rows by N integer columns; 0 = undetected, "NA" = missing.
inline void write_observations_csv(const std::filesystem::path& path, const ObservationSet& y) {
  auto out = detail::open_out(path);
  for (int t = 1; t <= y.horizon; ++t) {
    for (int c = 0; c < y.n_components; ++c) {
      if (c) out << ',';
      int v = y.at(t, c);
      if (v < 0)
        out << "NA";
      else
        out << v;
    }
    out << '\n';
  }
}

inline ObservationSet read_observations_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  ObservationSet y;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (y.n_components == 0)
      y.n_components = static_cast<int>(fields.size());
    else if (static_cast<int>(fields.size()) != y.n_components)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(y.n_components) + " columns, got " +
                      std::to_string(fields.size()));
    for (const auto& f : fields) {
      if (f == "NA") {
        y.obs.push_back(-1);
        continue;
      }
      int v = 0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size() || v < 0)
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": bad observation '" + f + "'");
      y.obs.push_back(v);
    }
    ++y.horizon;
  }
  if (y.horizon == 0) throw DataError(path.string() + ": empty observation file");
  return y;
}

/// (T+1) rows by N columns of state indices, row 0 = x_0.
inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = detail::open_out(path);
  for (int t = 0; t <= traj.horizon; ++t) {
    for (int c = 0; c < traj.n_components; ++c) {
      if (c) out << ',';
      out << traj.at(t, c);
    }
    out << '\n';
  }
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  Trajectory traj;
  std::string line;
  int rows = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (traj.n_components == 0)
      traj.n_components = static_cast<int>(fields.size());
    else if (static_cast<int>(fields.size()) != traj.n_components)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    for (const auto& f : fields) {
      int v = 0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size() || v < 0)
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad state '" + f +
                        "'");
      traj.states.push_back(v);
    }
    ++rows;
  }
  if (rows < 2) throw DataError(path.string() + ": trajectory needs at least rows 0 and 1");
  traj.horizon = rows - 1;
  return traj;
}

// --- covariates ---------------------------------------------------------------

/// Regression schema: header "w1,w2". Farm schema: "x_km,y_km,cattle,sheep".
/// Spatial regression schema: "w1,w2,x_km,y_km".
inline void write_covariates_csv(const std::filesystem::path& path, const Covariates& cov) {
  auto out = detail::open_out(path);
  if (cov.has_farms()) {
    out << "x_km,y_km,cattle,sheep\n";
    for (std::size_t i = 0; i < cov.cattle.size(); ++i)
      out << detail::fmt_double(cov.coords_km[i][0]) << ','
          << detail::fmt_double(cov.coords_km[i][1]) << ','
          << detail::fmt_double(cov.cattle[i]) << ',' << detail::fmt_double(cov.sheep[i])
          << '\n';
    return;
  }
  if (cov.has_coords()) {
    out << "w1,w2,x_km,y_km\n";
    for (std::size_t i = 0; i < cov.w.size(); ++i)
      out << detail::fmt_double(cov.w[i][0]) << ',' << detail::fmt_double(cov.w[i][1]) << ','
          << detail::fmt_double(cov.coords_km[i][0]) << ','
          << detail::fmt_double(cov.coords_km[i][1]) << '\n';
    return;
  }
  out << "w1,w2\n";
  for (const auto& w : cov.w)
    out << detail::fmt_double(w[0]) << ',' << detail::fmt_double(w[1]) << '\n';
}

inline Covariates read_covariates_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string header;
  if (!std::getline(in, header)) throw DataError(path.string() + ": empty covariate file");
  auto cols = detail::split_csv_line(header);
  Covariates cov;
  std::string line;
  int lineno = 1;
  auto expect = [&](std::size_t n, const std::vector<std::string>& fields) {
    if (fields.size() != n)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(n) + " fields");
  };
  const std::string where = path.string();
  if (cols == std::vector<std::string>{"w1", "w2"}) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = detail::split_csv_line(line);
      expect(2, f);
      cov.w.push_back({detail::parse_double(f[0], where), detail::parse_double(f[1], where)});
    }
  } else if (cols == std::vector<std::string>{"w1", "w2", "x_km", "y_km"}) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = detail::split_csv_line(line);
      expect(4, f);
      cov.w.push_back({detail::parse_double(f[0], where), detail::parse_double(f[1], where)});
      cov.coords_km.push_back(
          {detail::parse_double(f[2], where), detail::parse_double(f[3], where)});
    }
  } else if (cols == std::vector<std::string>{"x_km", "y_km", "cattle", "sheep"}) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = detail::split_csv_line(line);
      expect(4, f);
      cov.coords_km.push_back(
          {detail::parse_double(f[0], where), detail::parse_double(f[1], where)});
      cov.cattle.push_back(detail::parse_double(f[2], where));
      cov.sheep.push_back(detail::parse_double(f[3], where));
    }
  } else {
    throw DataError(path.string() + ": unrecognized covariate header '" + header + "'");
  }
  cov.validate();
  return cov;
}

// --- model configuration -------------------------------------------------------

struct ModelConfig {
  std::string model;  // sis | sis_spatial | seir | sinr
  int n_components = 0;
  int horizon = 0;
  std::map<std::string, std::vector<double>> params;  // natural scale
};

inline ModelConfig parse_model_config(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    cfg.model = j.at("model").get<std::string>();
    cfg.n_components = j.at("N").get<int>();
    cfg.horizon = j.at("T").get<int>();
    for (const auto& [key, value] : j.at("params").items()) {
      if (value.is_number())
        cfg.params[key] = {value.get<double>()};
      else
        cfg.params[key] = value.get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.model != "sis" && cfg.model != "sis_spatial" && cfg.model != "seir" &&
      cfg.model != "sinr")
    throw ConfigError("config: unknown model '" + cfg.model + "'");
  if (cfg.n_components < 1) throw ConfigError("config: N must be >= 1");
  if (cfg.horizon < 1) throw ConfigError("config: T must be >= 1");
  return cfg;
}

inline ModelConfig load_model_config(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_model_config(j);
}

inline nlohmann::json config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["model"] = cfg.model;
  j["N"] = cfg.n_components;
  j["T"] = cfg.horizon;
  j["params"] = nlohmann::json::object();
  for (const auto& [key, value] : cfg.params) j["params"][key] = value;
  return j;
}

/// Flatten the named parameter blocks into the layout's order, natural scale.
/// The farm model's emission is fixed; a configured "q" must spell that out.
inline std::vector<double> natural_params(const ModelConfig& cfg, const ParamLayout& layout) {
  auto params = cfg.params;
  if (cfg.model == "sinr") {
    auto it = params.find("q");
    if (it != params.end()) {
      if (it->second != std::vector<double>{0.0, 0.0, 1.0, 0.0})
        throw ConfigError("config: sinr emission q is fixed at [0,0,1,0]");
      params.erase(it);
    }
  }
  std::vector<double> natural;
  natural.reserve(layout.dim());
  for (const auto& block : layout.blocks()) {
    auto it = params.find(block.name);
    if (it == params.end())
      throw ConfigError("config: missing parameter block '" + block.name + "'");
    if (it->second.size() != block.size)
      throw ConfigError("config: parameter block '" + block.name + "' has length " +
                        std::to_string(it->second.size()) + ", expected " +
                        std::to_string(block.size));
    natural.insert(natural.end(), it->second.begin(), it->second.end());
    params.erase(it);
  }
  if (!params.empty())
    throw ConfigError("config: unknown parameter block '" + params.begin()->first + "'");
  return natural;
}

// --- model construction -------------------------------------------------------

using AnyModel = std::variant<SisModel, SpatialSisModel, SeirModel, SinrModel>;

/// Synthesizes the covariate schema each model family expects.
inline Covariates default_covariates(const ModelConfig& cfg, Rng rng) {
  if (cfg.model == "sinr") return synthetic_farms(cfg.n_components, 20.0, rng);
  if (cfg.model == "sis_spatial") return spatial_covariates(cfg.n_components, 5.0, rng);
  return standard_covariates(cfg.n_components, rng);
}

inline AnyModel build_model(const ModelConfig& cfg, Covariates cov) {
  if (cfg.model == "sis") return SisModel(cfg.n_components, std::move(cov));
  if (cfg.model == "sis_spatial") return SpatialSisModel(cfg.n_components, std::move(cov));
  if (cfg.model == "seir") return SeirModel(cfg.n_components, std::move(cov));
  return SinrModel(cfg.n_components, std::move(cov));
}

// --- partitions -----------------------------------------------------------------

/// "singletons", "pairs", or a JSON file holding an array of index arrays.
inline Partition parse_partition(const std::string& spec, int n, int state_card) {
  if (spec == "singletons") return Partition::singletons(n, state_card);
  if (spec == "pairs") return Partition::pairs(n, state_card);
  auto in = detail::open_in(spec);
  nlohmann::json j;
  try {
    in >> j;
    return Partition(n, j.get<std::vector<std::vector<int>>>(), state_card);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(spec + ": " + e.what());
  }
}

// --- structured outputs -----------------------------------------------------------

/// (simulation_index, block_id, log_lik) rows of one evaluation.
inline void write_eval_dump_csv(const std::filesystem::path& path,
                                const MarginalEstimate<double>& est, std::size_t n_blocks) {
  auto out = detail::open_out(path);
  out << "simulation_index,block_id,log_lik\n";
  for (int i = 0; i < est.n_sims; ++i)
    for (std::size_t k = 0; k < n_blocks; ++k)
      out << i << ',' << k << ',' << detail::fmt_double(est.per_sim(i, k, n_blocks)) << '\n';
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace simbacl
