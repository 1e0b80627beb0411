#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lproj/config.hpp"
#include "lproj/csv.hpp"
#include "lproj/local_projection.hpp"
#include "lproj/smooth_lp.hpp"
#include "lproj/transforms.hpp"
#include "lproj/var_identification.hpp"

namespace lproj {

namespace app_detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw estimation_error("cannot write '" + path + "'");
  return out;
}

}  // namespace app_detail

/// Figure-data emission: one row per (state, horizon) with the band at the
/// configured confidence level.
inline void emit_figure_data(const IrfResult& result, const std::string& path) {
  auto out = app_detail::open_out(path);
  out << "horizon,state,estimate,ci_low,ci_high\n";
  for (const auto& s : result.states)
    for (size_t h = 0; h < s.points.size(); ++h)
      out << h << ',' << s.label << ',' << app_detail::fmt(s.points[h].estimate) << ','
          << app_detail::fmt(s.points[h].ci_low) << ','
          << app_detail::fmt(s.points[h].ci_high) << '\n';
}

inline void write_irf_csv(const IrfResult& result, const std::string& path) {
  auto out = app_detail::open_out(path);
  out << "horizon,state,estimate,se,ci_low,ci_high\n";
  for (const auto& s : result.states)
    for (size_t h = 0; h < s.points.size(); ++h)
      out << h << ',' << s.label << ',' << app_detail::fmt(s.points[h].estimate) << ','
          << app_detail::fmt(s.points[h].se) << ',' << app_detail::fmt(s.points[h].ci_low)
          << ',' << app_detail::fmt(s.points[h].ci_high) << '\n';
}

inline void write_diff_csv(const IrfResult& result, const std::string& path) {
  auto out = app_detail::open_out(path);
  out << "horizon,label,estimate,se,pvalue,stars\n";
  for (const auto& d : result.diffs)
    for (size_t h = 0; h < d.rows.size(); ++h)
      out << h << ',' << d.label << ',' << app_detail::fmt(d.rows[h].estimate) << ','
          << app_detail::fmt(d.rows[h].se) << ',' << app_detail::fmt(d.rows[h].pvalue) << ','
          << d.rows[h].stars << '\n';
}

inline void write_table(const std::vector<std::string>& rows, const std::string& path) {
  auto out = app_detail::open_out(path);
  for (const auto& r : rows) out << r << '\n';
}

inline void write_multiplier_csv(const MultiplierResult& result, const std::string& path) {
  auto out = app_detail::open_out(path);
  out << "horizon,state,estimate,se,ci_low,ci_high,effective_f,effective_f_critical\n";
  for (size_t s = 0; s < result.irf.states.size(); ++s) {
    const auto& st = result.irf.states[s];
    for (size_t h = 0; h < st.points.size(); ++h) {
      out << h << ',' << st.label << ',' << app_detail::fmt(st.points[h].estimate) << ','
          << app_detail::fmt(st.points[h].se) << ',' << app_detail::fmt(st.points[h].ci_low)
          << ',' << app_detail::fmt(st.points[h].ci_high) << ','
          << app_detail::fmt(result.effective_f[s][h]) << ','
          << app_detail::fmt(result.effective_f_crit[s][h]) << '\n';
    }
  }
}

/// Orchestrates the full pipeline: ingest, transform, state construction,
/// shock identification, estimation, and file emission.
class Runner {
 public:
  explicit Runner(RunConfig cfg) : cfg_(std::move(cfg)) {}

  const Dataset& dataset() {
    ensure_loaded();
    return ds_;
  }

  /// Dry-run diagnostics: schema checks and per-horizon effective samples.
  std::vector<std::string> validate() {
    std::vector<std::string> diags;
    if (cfg_.series_file.empty()) {
      diags.push_back("data.series_file missing");
      return diags;
    }
    try {
      ensure_loaded();
    } catch (const std::exception& e) {
      diags.push_back(std::string("ingestion: ") + e.what());
      return diags;
    }
    auto need = [&](const std::string& name, const std::string& where) {
      if (!name.empty() && !ds_.has(name))
        diags.push_back(where + ": series '" + name + "' not in dataset");
    };
    need(cfg_.dependent, "irf.dependent");
    for (const auto& c : cfg_.controls) need(c, "irf.controls");
    if (cfg_.state) need(cfg_.state->source, "state.source");
    if (cfg_.second_state) need(cfg_.second_state->source, "second_state.source");
    if (cfg_.multiplier_enabled) {
      need(cfg_.mult_outcome, "multiplier.outcome");
      need(cfg_.mult_spending, "multiplier.spending");
    }
    if (cfg_.shock.kind != "file")
      for (const auto& v : cfg_.var_variables) need(v, "var.variables");
    if (!diags.empty()) return diags;

    // Effective sample per horizon, using a unit shock placeholder when the
    // identified shock is not built yet.
    Dataset probe = ds_;
    probe.add("__probe_shock", Eigen::VectorXd::Zero(ds_.length()));
    LpSpec spec = base_spec(&probe, "__probe_shock");
    for (int h = 0; h <= spec.horizon_max; ++h) {
      try {
        Design d = build_design(probe, spec, h);
        if (!d.warnings.empty())
          for (const auto& w : d.warnings) diags.push_back("warning: " + w);
        diags.push_back("h=" + std::to_string(h) + ": " + std::to_string(d.y.size()) +
                        " observations");
      } catch (const std::exception& e) {
        diags.push_back(std::string("warning: ") + e.what());
      }
    }
    return diags;
  }

  StateSeries make_state(const StateConfig& sc) {
    ensure_loaded();
    Series src = ds_.get(sc.source);
    Series driver;
    if (sc.trend == "linear")
      driver = linear_detrend(src).residual;
    else if (sc.trend == "hp")
      driver = hp_filter(src, sc.hp_lambda).residual;
    else
      driver = src.core();
    return build_state(driver, sc.mode, sc.gamma, sc.lag);
  }

  /// Identified shock series for a configured source, standardized and
  /// cached under its key.
  Series make_shock(const ShockSourceConfig& src) {
    ensure_loaded();
    std::string key = shock_key(src);
    auto it = shocks_.find(key);
    if (it != shocks_.end()) return it->second;
    Series s;
    if (src.kind == "timing") {
      s = timing_shocks(ds_, cfg_.var_variables, cfg_.var_lags, cfg_.mult_spending);
    } else if (src.kind == "narrative_sign") {
      VarModel model = estimate_bvar(ds_, cfg_.var_variables, cfg_.var_lags, cfg_.var_draws,
                                     cfg_.seed, cfg_.threads);
      s = narrative_shocks(model, cfg_.restrictions, cfg_.seed, &id_stats_,
                           cfg_.sign_horizon, cfg_.threads, cfg_.mult_spending);
      has_id_stats_ = true;
    } else {
      s = standardize_shock(load_shock_series(src.file, cfg_.delimiter));
    }
    shocks_.emplace(key, s);
    return s;
  }

  void run_states() {
    if (!cfg_.state) return;
    auto t0 = now();
    StateSeries st = make_state(*cfg_.state);
    Series src = ds_.get(cfg_.state->source).core();
    auto out = app_detail::open_out(out_path("states.csv"));
    out << "quarter,source,weight\n";
    for (long i = 0; i < st.series.size(); ++i) {
      Quarter q = st.series.start() + static_cast<int>(i);
      out << q.str() << ',' << app_detail::fmt(src.at(q)) << ','
          << app_detail::fmt(st.series.values()[i]) << '\n';
    }
    timings_["states"] = elapsed_ms(t0);
  }

  void run_identify() {
    auto t0 = now();
    Series s = make_shock(cfg_.shock);
    write_shock_series(out_path("shocks_" + shock_key(cfg_.shock) + ".csv"), s);
    for (const auto& instr : cfg_.instruments) {
      Series zi = make_shock(instr);
      write_shock_series(out_path("shocks_" + shock_key(instr) + ".csv"), zi);
    }
    timings_["identify"] = elapsed_ms(t0);
  }

  IrfResult run_irf() {
    auto t0 = now();
    Series shock = make_shock(cfg_.shock);
    std::string shock_name = "shock_" + shock_key(cfg_.shock);
    ds_.add(shock_name, shock);
    LpSpec spec = base_spec(&ds_, shock_name);

    IrfResult result;
    if (cfg_.estimator == "slp") {
      BasisSet basis = bspline_basis(spec.horizon_max);
      StackedSystem sys = stack_system(ds_, spec, basis);
      PenaltyMatrix pen = difference_penalty(basis.K, cfg_.slp_r);
      Eigen::MatrixXd P = assemble_penalty(sys, pen);
      auto grid = default_mu_grid(sys, P, cfg_.mu_points, cfg_.mu_lo, cfg_.mu_hi);
      SlpFit fit = slp_fit(sys, pen, grid, cfg_.cv_folds, cfg_.contiguous_folds, cfg_.threads);
      result = slp_irf(sys, basis, fit, spec, cfg_.eval_points);
      auto cv = app_detail::open_out(out_path("cv_curve.csv"));
      cv << "mu,loss\n";
      for (const auto& [mu, loss] : fit.cv.curve)
        cv << app_detail::fmt(mu) << ',' << app_detail::fmt(loss) << '\n';
    } else if (spec.second_state) {
      result = estimate_horse_race(ds_, spec, cfg_.threads);
    } else if (spec.state && spec.state->mode == StateMode::continuous) {
      result = estimate_continuous(ds_, spec, cfg_.eval_points, cfg_.threads);
    } else {
      result = estimate_lp(ds_, spec, cfg_.threads);
    }

    write_irf_csv(result, out_path("irf_" + cfg_.dependent + ".csv"));
    write_diff_csv(result, out_path("irf_" + cfg_.dependent + "_diff.csv"));
    write_table(difference_table(result), out_path("irf_" + cfg_.dependent + "_table.txt"));
    emit_figure_data(result, out_path("figure_irf_" + cfg_.dependent + ".csv"));
    timings_["irf"] = elapsed_ms(t0);
    return result;
  }

  MultiplierResult run_multiplier() {
    auto t0 = now();
    std::vector<Series> instruments;
    for (const auto& instr : cfg_.instruments) instruments.push_back(make_shock(instr));
    LpSpec spec = base_spec(&ds_, "");
    spec.dependent = cfg_.mult_outcome;
    spec.endogenous = cfg_.mult_spending;
    MultiplierResult result = estimate_multiplier(ds_, spec, instruments, cfg_.threads);
    write_multiplier_csv(result, out_path("multiplier_" + cfg_.mult_outcome + ".csv"));
    write_diff_csv(result.irf, out_path("multiplier_" + cfg_.mult_outcome + "_diff.csv"));
    write_table(difference_table(result.irf),
                out_path("multiplier_" + cfg_.mult_outcome + "_table.txt"));
    emit_figure_data(result.irf, out_path("figure_multiplier_" + cfg_.mult_outcome + ".csv"));
    timings_["multiplier"] = elapsed_ms(t0);
    return result;
  }

  void write_manifest() {
    nlohmann::json m;
    m["config_hash"] = fnv1a_hex(cfg_.canonical);
    m["seed"] = cfg_.seed;
    m["threads"] = cfg_.threads;
    m["version"] = version_string;
    nlohmann::json t;
    for (const auto& [stage, ms] : timings_) t[stage] = ms;
    m["timings_ms"] = t;
    if (has_id_stats_) {
      m["acceptance"] = {{"total", id_stats_.total},
                         {"sign_accepted", id_stats_.sign_accepted},
                         {"narrative_accepted", id_stats_.narrative_accepted},
                         {"ambiguous", id_stats_.ambiguous}};
    }
    auto out = app_detail::open_out(out_path("run_manifest.json"));
    out << m.dump(2) << '\n';
  }

  void run_all() {
    ensure_loaded();
    run_states();
    run_identify();
    run_irf();
    if (cfg_.multiplier_enabled) run_multiplier();
    write_manifest();
  }

  const IdentificationStats& identification_stats() const { return id_stats_; }

  static std::string fnv1a_hex(const std::string& s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(s)));
    return buf;
  }

 private:
  void ensure_loaded() {
    if (loaded_) return;
    if (cfg_.series_file.empty()) throw config_error("data.series_file not set");
    CsvOptions opt;
    opt.delimiter = cfg_.delimiter;
    opt.quarter_column = cfg_.quarter_column;
    opt.schema = cfg_.columns;
    ds_ = load_dataset(cfg_.series_file, opt);
    if (!cfg_.securities_file.empty()) {
      auto records = load_securities(cfg_.securities_file, cfg_.delimiter);
      Series cost = compute_fiscal_cost(records, ds_.get(cfg_.gdp_series));
      ds_.add(cfg_.fiscal_cost_name, cost);
    }
    if (!cfg_.potential_series.empty()) {
      Series pot = ds_.get(cfg_.potential_series);
      for (const auto& name : cfg_.scale_series)
        if (ds_.has(name)) ds_.add(name, gordon_krenn_scale(ds_.get(name), pot));
    }
    std::filesystem::create_directories(cfg_.output_dir);
    loaded_ = true;
  }

  LpSpec base_spec(Dataset* ds, const std::string& shock_name) {
    LpSpec spec;
    spec.dependent = cfg_.dependent;
    spec.shock = shock_name;
    spec.controls = cfg_.controls;
    spec.control_lags = cfg_.control_lags;
    spec.horizon_max = cfg_.horizon_max;
    spec.ci_level = cfg_.ci_level;
    if (cfg_.state) {
      spec.state = make_state(*cfg_.state);
      spec.state_name = cfg_.state->name;
    }
    if (cfg_.second_state) {
      spec.second_state = make_state(*cfg_.second_state);
      spec.second_state_name = cfg_.second_state->name;
    }
    (void)ds;
    return spec;
  }

  std::string shock_key(const ShockSourceConfig& src) const {
    if (src.kind != "file") return src.kind;
    return "file_" + std::filesystem::path(src.file).stem().string();
  }

  std::string out_path(const std::string& name) const {
    return (std::filesystem::path(cfg_.output_dir) / name).string();
  }

  static std::chrono::steady_clock::time_point now() {
    return std::chrono::steady_clock::now();
  }
  static double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(now() - t0).count();
  }

  RunConfig cfg_;
  Dataset ds_;
  bool loaded_ = false;
  std::map<std::string, Series> shocks_;
  std::map<std::string, double> timings_;
  IdentificationStats id_stats_;
  bool has_id_stats_ = false;
};

}  // namespace lproj
