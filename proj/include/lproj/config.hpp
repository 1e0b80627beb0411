#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lproj/common.hpp"
#include "lproj/transforms.hpp"
#include "lproj/var_identification.hpp"

namespace lproj {

struct StateConfig {
  std::string source = "fiscal_cost";
  std::string trend = "linear";  // linear | hp | none
  double hp_lambda = 1600.0;
  StateMode mode = StateMode::logit;
  double gamma = 10.0;
  int lag = 1;
  std::string name = "cost";
};

struct ShockSourceConfig {
  std::string kind = "timing";  // timing | narrative_sign | file
  std::string file;             // for kind == file
};

/// Every default is the baseline configuration, so an empty override block
/// reproduces the standard pipeline.
struct RunConfig {
  // data
  std::string series_file;
  char delimiter = ',';
  std::string quarter_column = "quarter";
  std::map<std::string, std::string> columns;  // file column -> series name
  std::string securities_file;                 // optional
  std::string gdp_series = "gdp";
  std::string fiscal_cost_name = "fiscal_cost";
  std::string potential_series;                // optional Gordon-Krenn scaling
  std::vector<std::string> scale_series{"output", "spending", "tax", "debt"};

  // states
  std::optional<StateConfig> state = StateConfig{};
  std::optional<StateConfig> second_state;

  // shock identification
  ShockSourceConfig shock;
  std::vector<std::string> var_variables{"output", "spending", "tax", "debt"};
  int var_lags = 4;
  long var_draws = 50000;
  int sign_horizon = 4;
  std::vector<NarrativeRestriction> restrictions{
      {Quarter(1917, 2), +1, true}, {Quarter(1941, 4), +1, true}};

  // estimator
  std::string estimator = "lp";  // lp | slp
  int slp_r = 3;
  int cv_folds = 5;
  int mu_points = 25;
  double mu_lo = 1e-4;
  double mu_hi = 1e6;
  bool contiguous_folds = true;

  // projection spec
  std::string dependent = "output";
  std::vector<std::string> controls{"output", "spending", "tax", "debt"};
  int control_lags = 4;
  int horizon_max = 16;
  double ci_level = 0.90;
  std::vector<double> eval_points;  // continuous state; empty = percentiles

  // multipliers
  bool multiplier_enabled = true;
  std::string mult_outcome = "output";
  std::string mult_spending = "spending";
  std::vector<ShockSourceConfig> instruments{{"timing", ""}};

  // run control
  std::uint64_t seed = 42;
  int threads = 1;
  std::string output_dir = "out";

  std::string canonical;  // sorted-key dump of the parsed config, for hashing
};

namespace config_detail {

inline StateMode parse_mode(const std::string& s) {
  if (s == "dummy") return StateMode::dummy;
  if (s == "logit") return StateMode::logit;
  if (s == "continuous") return StateMode::continuous;
  throw config_error("unknown state mode '" + s + "'");
}

inline StateConfig parse_state(const nlohmann::json& j, const std::string& default_name) {
  StateConfig s;
  s.name = default_name;
  s.source = j.value("source", s.source);
  if (j.contains("trend")) {
    const auto& t = j.at("trend");
    if (t.is_string()) {
      s.trend = t.get<std::string>();
    } else if (t.is_object() && t.contains("hp")) {
      s.trend = "hp";
      s.hp_lambda = t.at("hp").get<double>();
    } else {
      throw config_error("state.trend must be a string or {\"hp\": lambda}");
    }
  }
  if (s.trend != "linear" && s.trend != "hp" && s.trend != "none")
    throw config_error("state.trend must be linear, hp or none");
  s.hp_lambda = j.value("hp_lambda", s.hp_lambda);
  if (j.contains("mode")) s.mode = parse_mode(j.at("mode").get<std::string>());
  s.gamma = j.value("gamma", s.gamma);
  s.lag = j.value("lag", s.lag);
  s.name = j.value("name", s.name);
  return s;
}

inline ShockSourceConfig parse_shock_source(const nlohmann::json& j) {
  ShockSourceConfig s;
  if (j.is_string()) {
    s.kind = j.get<std::string>();
  } else {
    s.kind = j.value("kind", s.kind);
    s.file = j.value("file", s.file);
  }
  if (s.kind != "timing" && s.kind != "narrative_sign" && s.kind != "file")
    throw config_error("shock source must be timing, narrative_sign or file");
  if (s.kind == "file" && s.file.empty())
    throw config_error("shock source 'file' needs a file path");
  return s;
}

}  // namespace config_detail

inline RunConfig parse_config_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      c.series_file = d.value("series_file", c.series_file);
      std::string delim = d.value("delimiter", std::string(1, c.delimiter));
      if (delim.size() != 1) throw config_error("delimiter must be one character");
      c.delimiter = delim[0];
      c.quarter_column = d.value("quarter_column", c.quarter_column);
      if (d.contains("columns"))
        c.columns = d.at("columns").get<std::map<std::string, std::string>>();
      c.securities_file = d.value("securities_file", c.securities_file);
      c.gdp_series = d.value("gdp_series", c.gdp_series);
      c.fiscal_cost_name = d.value("fiscal_cost_name", c.fiscal_cost_name);
      c.potential_series = d.value("potential_series", c.potential_series);
      if (d.contains("scale_series"))
        c.scale_series = d.at("scale_series").get<std::vector<std::string>>();
    }
    if (j.contains("state")) {
      if (j.at("state").is_null())
        c.state.reset();
      else
        c.state = config_detail::parse_state(j.at("state"), "cost");
    }
    if (j.contains("second_state"))
      c.second_state = config_detail::parse_state(j.at("second_state"), "quantity");
    if (j.contains("shock")) c.shock = config_detail::parse_shock_source(j.at("shock"));
    if (j.contains("var")) {
      const auto& v = j.at("var");
      if (v.contains("variables"))
        c.var_variables = v.at("variables").get<std::vector<std::string>>();
      c.var_lags = v.value("lags", c.var_lags);
      c.var_draws = v.value("draws", c.var_draws);
      c.sign_horizon = v.value("sign_horizon", c.sign_horizon);
      if (v.contains("restrictions")) {
        c.restrictions.clear();
        for (const auto& r : v.at("restrictions")) {
          NarrativeRestriction nr;
          nr.date = Quarter::parse(r.at("date").get<std::string>());
          std::string sign = r.value("sign", "+");
          nr.shock_sign = sign == "-" ? -1 : +1;
          nr.dominance = r.value("dominance", true);
          c.restrictions.push_back(nr);
        }
      }
    }
    if (j.contains("estimator")) {
      const auto& e = j.at("estimator");
      c.estimator = e.value("kind", c.estimator);
      if (c.estimator != "lp" && c.estimator != "slp")
        throw config_error("estimator must be lp or slp");
      c.slp_r = e.value("r", c.slp_r);
      c.cv_folds = e.value("cv_folds", c.cv_folds);
      c.mu_points = e.value("mu_grid_points", c.mu_points);
      c.mu_lo = e.value("mu_grid_lo", c.mu_lo);
      c.mu_hi = e.value("mu_grid_hi", c.mu_hi);
      c.contiguous_folds = e.value("contiguous_folds", c.contiguous_folds);
    }
    if (j.contains("irf")) {
      const auto& s = j.at("irf");
      c.dependent = s.value("dependent", c.dependent);
      if (s.contains("controls"))
        c.controls = s.at("controls").get<std::vector<std::string>>();
      c.control_lags = s.value("control_lags", c.control_lags);
      c.horizon_max = s.value("horizon_max", c.horizon_max);
      c.ci_level = s.value("ci_level", c.ci_level);
      if (s.contains("eval_points"))
        c.eval_points = s.at("eval_points").get<std::vector<double>>();
    }
    if (j.contains("multiplier")) {
      const auto& m = j.at("multiplier");
      c.multiplier_enabled = m.value("enabled", c.multiplier_enabled);
      c.mult_outcome = m.value("outcome", c.mult_outcome);
      c.mult_spending = m.value("spending", c.mult_spending);
      if (m.contains("instruments")) {
        c.instruments.clear();
        for (const auto& i : m.at("instruments"))
          c.instruments.push_back(config_detail::parse_shock_source(i));
      }
    }
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config parse error: ") + e.what());
  }
  c.canonical = j.dump();
  return c;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config_json(j);
}

inline std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lproj
