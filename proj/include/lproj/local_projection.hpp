#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "lproj/parallel.hpp"
#include "lproj/regression.hpp"
#include "lproj/series.hpp"
#include "lproj/transforms.hpp"

namespace lproj {

/// One local-projection run: dependent z, identified shock, lagged controls,
/// optional regime weights. State series are expected pre-dated (built with
/// lag=1) so that their value at t is the weight applied to period-t rows.
struct LpSpec {
  std::string dependent;
  std::string shock;
  std::vector<std::string> controls{"output", "spending", "tax", "debt"};
  int control_lags = 4;
  int horizon_max = 16;
  std::optional<StateSeries> state;
  std::optional<StateSeries> second_state;
  double ci_level = 0.90;
  bool cumulative = false;
  std::string endogenous;  // cumulated and instrumented in multiplier runs
  std::optional<int> hac_bandwidth;  // default h+1: errors are MA(h) under the null
  std::string state_name = "cost";
  std::string second_state_name = "quantity";
};

inline int lp_bandwidth(const LpSpec& spec, int h) {
  return spec.hac_bandwidth ? *spec.hac_bandwidth : h + 1;
}

struct HorizonPoint {
  double estimate = nan_value;
  double se = nan_value;
  double ci_low = nan_value;
  double ci_high = nan_value;
};

struct StateIrf {
  std::string label;
  std::vector<HorizonPoint> points;  // indexed by horizon 0..H
};

struct DiffRow {
  double estimate = nan_value;
  double se = nan_value;
  double pvalue = nan_value;
  std::string stars;
};

struct DiffTest {
  std::string label;
  std::vector<DiffRow> rows;
};

struct IrfResult {
  std::vector<StateIrf> states;
  std::vector<DiffTest> diffs;
  double ci_level = 0.90;
  std::vector<std::string> warnings;
};

/// Per-state cumulative multipliers with first-stage relevance diagnostics.
struct MultiplierResult {
  IrfResult irf;  // m_h per state plus cross-state difference tests
  std::vector<std::string> f_labels;
  std::vector<std::vector<double>> effective_f;       // [state][h]
  std::vector<std::vector<double>> effective_f_crit;  // [state][h]
};

namespace lp_detail {

// Row weighting for one regressor block.
struct Block {
  std::string label;
  bool unit = false;      // weight identically 1
  Series weights;         // used when !unit
};

enum class Scheme { linear, two_state, interactions };

struct BlockPlan {
  Scheme scheme = Scheme::linear;
  std::vector<Block> blocks;
};

inline BlockPlan plan_blocks(const LpSpec& spec) {
  BlockPlan plan;
  if (spec.second_state) {
    if (!spec.state) throw estimation_error("horse race requires both state variables");
    plan.scheme = Scheme::interactions;
    plan.blocks.push_back({"baseline", true, {}});
    plan.blocks.push_back({spec.state_name, false, spec.state->series});
    plan.blocks.push_back({spec.second_state_name, false, spec.second_state->series});
  } else if (spec.state && spec.state->mode == StateMode::continuous) {
    plan.scheme = Scheme::interactions;
    plan.blocks.push_back({"level", true, {}});
    plan.blocks.push_back({"interaction", false, spec.state->series});
  } else if (spec.state) {
    plan.scheme = Scheme::two_state;
    Series w = spec.state->series;
    Series one_minus(w.start(), (1.0 - w.values().array()).matrix());
    plan.blocks.push_back({"high", false, w});
    plan.blocks.push_back({"low", false, std::move(one_minus)});
  } else {
    plan.blocks.push_back({"linear", true, {}});
  }
  return plan;
}

inline double block_weight(const Block& b, Quarter t) {
  return b.unit ? 1.0 : b.weights.at(t);
}

}  // namespace lp_detail

/// Horizon-h design. Columns are grouped per block in the order
/// [const, shock, control lags], each scaled by the block weight.
struct Design {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> col_labels;
  std::vector<std::string> block_labels;
  std::vector<long> block_offset;  // first column of each block
  long cols_per_block = 0;
  std::vector<Quarter> row_quarters;
  std::vector<std::string> warnings;
};

namespace lp_detail {

inline std::vector<Quarter> valid_rows(const Dataset& ds, const LpSpec& spec, int h,
                                       const BlockPlan& plan,
                                       const std::vector<const Series*>& extra_at_t,
                                       bool cumulate_dependent) {
  std::vector<Quarter> rows;
  const Eigen::VectorXd& dep = ds.values(spec.dependent);
  const Eigen::VectorXd& shk = ds.values(spec.shock);
  long n = ds.length();
  auto finite = [](double v) { return std::isfinite(v); };
  for (long i = 0; i < n; ++i) {
    Quarter t = ds.start() + static_cast<int>(i);
    if (i + h >= n) break;
    bool ok = finite(shk[i]);
    if (ok) {
      if (cumulate_dependent) {
        for (long j = i; ok && j <= i + h; ++j) ok = finite(dep[j]);
      } else {
        ok = finite(dep[i + h]);
      }
    }
    for (const auto& name : spec.controls) {
      if (!ok) break;
      const Eigen::VectorXd& c = ds.values(name);
      for (int l = 1; ok && l <= spec.control_lags; ++l)
        ok = (i - l >= 0) && finite(c[i - l]);
    }
    for (const auto& b : plan.blocks) {
      if (!ok) break;
      if (!b.unit) ok = finite(b.weights.at(t));
    }
    for (const Series* s : extra_at_t) {
      if (!ok) break;
      ok = finite(s->at(t));
    }
    if (ok) rows.push_back(t);
  }
  return rows;
}

}  // namespace lp_detail

/// Builds the horizon-h regression. Rows are quarters with complete leads
/// and lags; blocks whose weights vanish over the whole sample are dropped
/// with a warning instead of producing a singular system.
inline Design build_design(const Dataset& ds, const LpSpec& spec, int h) {
  if (h < 0) throw estimation_error("negative horizon");
  if (spec.control_lags < 1) throw estimation_error("control_lags must be >= 1");
  auto plan = lp_detail::plan_blocks(spec);
  auto rows = lp_detail::valid_rows(ds, spec, h, plan, {}, spec.cumulative);

  long cols_per_block = 2 + static_cast<long>(spec.controls.size()) * spec.control_lags;
  long T = static_cast<long>(rows.size());

  Design d;
  d.cols_per_block = cols_per_block;
  d.row_quarters = rows;

  // Drop degenerate blocks (all weights ~ 0 in-sample).
  std::vector<lp_detail::Block> kept;
  for (const auto& b : plan.blocks) {
    double max_abs = 0.0;
    if (b.unit) {
      max_abs = 1.0;
    } else {
      for (const Quarter& t : rows) max_abs = std::max(max_abs, std::abs(b.weights.at(t)));
    }
    if (max_abs < 1e-12) {
      d.warnings.push_back("h=" + std::to_string(h) + ": block '" + b.label +
                           "' has no in-sample weight, dropped");
    } else {
      kept.push_back(b);
    }
  }
  if (kept.empty()) throw estimation_error("h=" + std::to_string(h) + ": no usable block");

  long k = cols_per_block * static_cast<long>(kept.size());
  if (T < k + 8)
    throw estimation_error("h=" + std::to_string(h) + ": insufficient sample (" +
                           std::to_string(T) + " rows for " + std::to_string(k) +
                           " columns)");

  d.y.resize(T);
  d.X.resize(T, k);
  const Eigen::VectorXd& dep = ds.values(spec.dependent);
  const Eigen::VectorXd& shk = ds.values(spec.shock);
  std::vector<const Eigen::VectorXd*> ctrl;
  ctrl.reserve(spec.controls.size());
  for (const auto& name : spec.controls) ctrl.push_back(&ds.values(name));

  for (long r = 0; r < T; ++r) {
    long i = rows[r] - ds.start();
    if (spec.cumulative) {
      double acc = 0.0;
      for (long j = i; j <= i + h; ++j) acc += dep[j];
      d.y[r] = acc;
    } else {
      d.y[r] = dep[i + h];
    }
  }

  for (size_t bi = 0; bi < kept.size(); ++bi) {
    const auto& b = kept[bi];
    long off = static_cast<long>(bi) * cols_per_block;
    d.block_labels.push_back(b.label);
    d.block_offset.push_back(off);
    d.col_labels.push_back(b.label + ":const");
    d.col_labels.push_back(b.label + ":shock");
    for (const auto& name : spec.controls)
      for (int l = 1; l <= spec.control_lags; ++l)
        d.col_labels.push_back(b.label + ":" + name + ".l" + std::to_string(l));
    for (long r = 0; r < T; ++r) {
      long i = rows[r] - ds.start();
      double w = lp_detail::block_weight(b, rows[r]);
      d.X(r, off) = w;
      d.X(r, off + 1) = w * shk[i];
      long c = off + 2;
      for (size_t ci = 0; ci < ctrl.size(); ++ci)
        for (int l = 1; l <= spec.control_lags; ++l) d.X(r, c++) = w * (*ctrl[ci])[i - l];
    }
  }
  return d;
}

namespace lp_detail {

inline HorizonPoint make_point(double est, double var, double z) {
  HorizonPoint p;
  p.estimate = est;
  p.se = var > 0.0 ? std::sqrt(var) : 0.0;
  p.ci_low = est - z * p.se;
  p.ci_high = est + z * p.se;
  return p;
}

inline DiffRow make_diff(double est, double var) {
  DiffRow r;
  r.estimate = est;
  r.se = var > 0.0 ? std::sqrt(var) : 0.0;
  double zstat = r.se > 0.0 ? est / r.se : 0.0;
  r.pvalue = two_sided_pvalue(zstat);
  r.stars = significance_stars(r.pvalue);
  return r;
}

}  // namespace lp_detail

/// Per-horizon OLS of the local-projection design with Newey-West standard
/// errors. Two-state runs also report the cross-state contrast of the shock
/// coefficient, with its variance taken from the joint HAC covariance of
/// the single stacked regression.
inline IrfResult estimate_lp(const Dataset& ds, const LpSpec& spec, int threads = 1) {
  int H = spec.horizon_max;
  auto plan = lp_detail::plan_blocks(spec);
  double z = normal_quantile(0.5 + spec.ci_level / 2.0);

  struct PerHorizon {
    std::vector<std::string> labels;
    std::vector<HorizonPoint> points;
    std::vector<DiffRow> diffs;           // contrast or interaction tests
    std::vector<std::string> diff_labels;
    std::vector<std::string> warnings;
  };
  std::vector<PerHorizon> acc(H + 1);

  parallel_for(H + 1, threads, [&](long h) {
    Design d = build_design(ds, spec, static_cast<int>(h));
    RegressionResult fit = ols(d.y, d.X, &d.col_labels);
    Eigen::MatrixXd V;
    try {
      V = newey_west(d.X, fit.residuals, lp_bandwidth(spec, static_cast<int>(h)));
    } catch (const std::exception& e) {
      throw estimation_error("h=" + std::to_string(h) + ": " + e.what());
    }
    PerHorizon out;
    out.warnings = d.warnings;
    long nb = static_cast<long>(d.block_labels.size());
    for (long b = 0; b < nb; ++b) {
      long sc = d.block_offset[b] + 1;  // shock column
      out.labels.push_back(d.block_labels[b]);
      out.points.push_back(lp_detail::make_point(fit.coef[sc], V(sc, sc), z));
    }
    if (plan.scheme == lp_detail::Scheme::two_state && nb == 2) {
      long a = d.block_offset[0] + 1, bcol = d.block_offset[1] + 1;
      double est = fit.coef[a] - fit.coef[bcol];
      double var = V(a, a) + V(bcol, bcol) - 2.0 * V(a, bcol);
      out.diffs.push_back(lp_detail::make_diff(est, var));
      out.diff_labels.push_back(d.block_labels[0] + "-" + d.block_labels[1]);
    } else if (plan.scheme == lp_detail::Scheme::interactions) {
      for (long b = 1; b < nb; ++b) {
        long sc = d.block_offset[b] + 1;
        out.diffs.push_back(lp_detail::make_diff(fit.coef[sc], V(sc, sc)));
        out.diff_labels.push_back(d.block_labels[b]);
      }
    }
    acc[h] = std::move(out);
  });

  // Merge horizon slices; labels may differ if a block was dropped at some
  // horizons, so collect the union in first-seen order.
  IrfResult res;
  res.ci_level = spec.ci_level;
  auto state_index = [&](const std::string& label) {
    for (size_t i = 0; i < res.states.size(); ++i)
      if (res.states[i].label == label) return i;
    res.states.push_back({label, std::vector<HorizonPoint>(H + 1)});
    return res.states.size() - 1;
  };
  auto diff_index = [&](const std::string& label) {
    for (size_t i = 0; i < res.diffs.size(); ++i)
      if (res.diffs[i].label == label) return i;
    res.diffs.push_back({label, std::vector<DiffRow>(H + 1)});
    return res.diffs.size() - 1;
  };
  for (int h = 0; h <= H; ++h) {
    const auto& ph = acc[h];
    for (size_t i = 0; i < ph.labels.size(); ++i)
      res.states[state_index(ph.labels[i])].points[h] = ph.points[i];
    for (size_t i = 0; i < ph.diff_labels.size(); ++i)
      res.diffs[diff_index(ph.diff_labels[i])].rows[h] = ph.diffs[i];
    res.warnings.insert(res.warnings.end(), ph.warnings.begin(), ph.warnings.end());
  }
  return res;
}

/// Two simultaneous state variables: an always-on baseline block plus one
/// interaction block per state. Reported IRFs are the baseline and the two
/// interaction coefficient paths, each tested against zero.
inline IrfResult estimate_horse_race(const Dataset& ds, const LpSpec& spec, int threads = 1) {
  if (!spec.state || !spec.second_state)
    throw estimation_error("estimate_horse_race requires two state variables");
  const Series& s1 = spec.state->series;
  const Series& s2 = spec.second_state->series;
  if (s1.start() == s2.start() && s1.size() == s2.size() &&
      (s1.values() - s2.values()).cwiseAbs().maxCoeff() == 0.0)
    throw singular_design_error("horse race states are identical");
  return estimate_lp(ds, spec, threads);
}

inline double percentile(Eigen::VectorXd v, double q) {
  std::sort(v.data(), v.data() + v.size());
  double pos = q * static_cast<double>(v.size() - 1);
  long lo = static_cast<long>(std::floor(pos));
  long hi = std::min<long>(lo + 1, v.size() - 1);
  double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

/// Continuous-state IRFs evaluated at chosen state values. The response at
/// state value c is beta_level + c * beta_interaction with delta-method
/// variance; the difference test contrasts the last and first eval points.
inline IrfResult estimate_continuous(const Dataset& ds, const LpSpec& spec,
                                     std::vector<double> eval_points = {},
                                     int threads = 1) {
  if (!spec.state || spec.state->mode != StateMode::continuous)
    throw estimation_error("estimate_continuous requires a continuous state");
  int H = spec.horizon_max;
  double z = normal_quantile(0.5 + spec.ci_level / 2.0);

  Series core = spec.state->series.core();
  if (eval_points.empty())
    eval_points = {percentile(core.values(), 0.10), percentile(core.values(), 0.90)};

  IrfResult res;
  res.ci_level = spec.ci_level;
  double lo_obs = core.values().minCoeff(), hi_obs = core.values().maxCoeff();
  for (double c : eval_points) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "state=%g", c);
    res.states.push_back({buf, std::vector<HorizonPoint>(H + 1)});
    if (c < lo_obs || c > hi_obs) {
      std::snprintf(buf, sizeof(buf), "eval point %g outside observed state range", c);
      res.warnings.push_back(buf);
    }
  }
  bool with_diff = eval_points.size() >= 2;
  if (with_diff) res.diffs.push_back({"high-low", std::vector<DiffRow>(H + 1)});

  parallel_for(H + 1, threads, [&](long h) {
    Design d = build_design(ds, spec, static_cast<int>(h));
    if (d.block_labels.size() != 2)
      throw estimation_error("h=" + std::to_string(h) + ": interaction block dropped");
    RegressionResult fit = ols(d.y, d.X, &d.col_labels);
    Eigen::MatrixXd V = newey_west(d.X, fit.residuals, lp_bandwidth(spec, static_cast<int>(h)));
    long a = d.block_offset[0] + 1, b = d.block_offset[1] + 1;
    for (size_t e = 0; e < eval_points.size(); ++e) {
      double c = eval_points[e];
      double est = fit.coef[a] + c * fit.coef[b];
      double var = V(a, a) + c * c * V(b, b) + 2.0 * c * V(a, b);
      res.states[e].points[h] = lp_detail::make_point(est, var, z);
    }
    if (with_diff) {
      double dc = eval_points.back() - eval_points.front();
      res.diffs[0].rows[h] = lp_detail::make_diff(dc * fit.coef[b], dc * dc * V(b, b));
    }
  });
  return res;
}

/// LP-IV cumulative multipliers. For each horizon the dependent variable is
/// the cumulated outcome, the endogenous regressors are the block-weighted
/// cumulated spending, and the instruments are the block-weighted shocks.
/// First-stage relevance is tested per state with the effective F statistic.
inline MultiplierResult estimate_multiplier(const Dataset& ds, const LpSpec& spec,
                                            const std::vector<Series>& instruments,
                                            int threads = 1) {
  if (instruments.empty()) throw estimation_error("estimate_multiplier: no instruments");
  if (spec.endogenous.empty())
    throw estimation_error("estimate_multiplier: spec.endogenous not set");
  int H = spec.horizon_max;
  auto plan = lp_detail::plan_blocks(spec);
  double z = normal_quantile(0.5 + spec.ci_level / 2.0);
  long n_instr = static_cast<long>(instruments.size());

  struct PerHorizon {
    std::vector<std::string> labels;
    std::vector<HorizonPoint> points;
    std::vector<DiffRow> diffs;
    std::vector<std::string> diff_labels;
    std::vector<double> eff_f, eff_f_crit;
  };
  std::vector<PerHorizon> acc(H + 1);

  parallel_for(H + 1, threads, [&](long hl) {
    int h = static_cast<int>(hl);
    // Row validity: cumulated dependent and endogenous, controls, weights,
    // instruments at t.
    std::vector<const Series*> extra;
    for (const auto& s : instruments) extra.push_back(&s);
    LpSpec dep_spec = spec;
    dep_spec.cumulative = true;
    // No per-spec shock series here; instruments carry the identification.
    dep_spec.shock = spec.dependent;
    auto rows = lp_detail::valid_rows(ds, dep_spec, h, plan, extra, true);
    {
      const Eigen::VectorXd& gv = ds.values(spec.endogenous);
      std::vector<Quarter> ok;
      for (Quarter t : rows) {
        long i = t - ds.start();
        bool fine = true;
        for (long j = i; fine && j <= i + h; ++j) fine = std::isfinite(gv[j]);
        if (fine) ok.push_back(t);
      }
      rows = std::move(ok);
    }

    long T = static_cast<long>(rows.size());
    long n_blocks = static_cast<long>(plan.blocks.size());
    long exog_per_block = 1 + static_cast<long>(spec.controls.size()) * spec.control_lags;
    long total_cols = n_blocks * (exog_per_block + 1 + n_instr);
    if (T < total_cols + 8)
      throw estimation_error("h=" + std::to_string(h) + ": insufficient sample (" +
                             std::to_string(T) + " rows)");

    const Eigen::VectorXd& dep = ds.values(spec.dependent);
    const Eigen::VectorXd& gv = ds.values(spec.endogenous);
    std::vector<const Eigen::VectorXd*> ctrl;
    for (const auto& name : spec.controls) ctrl.push_back(&ds.values(name));

    Eigen::VectorXd y(T), cumg(T);
    Eigen::MatrixXd W(T, n_blocks);  // block weights per row
    for (long r = 0; r < T; ++r) {
      long i = rows[r] - ds.start();
      double sy = 0, sg = 0;
      for (long j = i; j <= i + h; ++j) {
        sy += dep[j];
        sg += gv[j];
      }
      y[r] = sy;
      cumg[r] = sg;
      for (long b = 0; b < n_blocks; ++b)
        W(r, b) = lp_detail::block_weight(plan.blocks[b], rows[r]);
    }

    Eigen::MatrixXd endog(T, n_blocks);
    for (long b = 0; b < n_blocks; ++b) endog.col(b) = W.col(b).cwiseProduct(cumg);

    Eigen::MatrixXd instr(T, n_blocks * n_instr);
    for (long b = 0; b < n_blocks; ++b)
      for (long s = 0; s < n_instr; ++s) {
        for (long r = 0; r < T; ++r)
          instr(r, b * n_instr + s) = W(r, b) * instruments[s].at(rows[r]);
      }

    Eigen::MatrixXd exog(T, n_blocks * exog_per_block);
    for (long b = 0; b < n_blocks; ++b) {
      long off = b * exog_per_block;
      for (long r = 0; r < T; ++r) {
        long i = rows[r] - ds.start();
        exog(r, off) = W(r, b);
        long c = off + 1;
        for (size_t ci = 0; ci < ctrl.size(); ++ci)
          for (int l = 1; l <= spec.control_lags; ++l) exog(r, c++) = W(r, b) * (*ctrl[ci])[i - l];
      }
    }

    int bw = lp_bandwidth(spec, h);
    IVResult iv = tsls(y, endog, instr, exog, bw);

    PerHorizon out;
    for (long b = 0; b < n_blocks; ++b) {
      out.labels.push_back(plan.blocks[b].label);
      out.points.push_back(
          lp_detail::make_point(iv.second_stage.coef[b], iv.hac_cov(b, b), z));
    }
    if (plan.scheme == lp_detail::Scheme::two_state && n_blocks == 2) {
      double est = iv.second_stage.coef[0] - iv.second_stage.coef[1];
      double var = iv.hac_cov(0, 0) + iv.hac_cov(1, 1) - 2.0 * iv.hac_cov(0, 1);
      out.diffs.push_back(lp_detail::make_diff(est, var));
      out.diff_labels.push_back(plan.blocks[0].label + "-" + plan.blocks[1].label);
    } else if (plan.scheme == lp_detail::Scheme::interactions) {
      for (long b = 1; b < n_blocks; ++b) {
        out.diffs.push_back(
            lp_detail::make_diff(iv.second_stage.coef[b], iv.hac_cov(b, b)));
        out.diff_labels.push_back(plan.blocks[b].label);
      }
    }

    // Per-state first stage: partial all exogenous columns out of the
    // state's endogenous column and instrument block, then effective F.
    for (long b = 0; b < n_blocks; ++b) {
      Eigen::MatrixXd Zb = instr.middleCols(b * n_instr, n_instr);
      Eigen::LDLT<Eigen::MatrixXd> exog_gram((exog.transpose() * exog));
      Eigen::MatrixXd Zt = Zb - exog * exog_gram.solve(exog.transpose() * Zb);
      Eigen::VectorXd xt =
          endog.col(b) - exog * exog_gram.solve(exog.transpose() * endog.col(b));
      RegressionResult pfs = ols(xt, Zt);
      Eigen::MatrixXd Wf = newey_west(Zt, pfs.residuals, bw);
      auto [stat, crit] = effective_f(pfs.coef, Zt, Wf);
      out.eff_f.push_back(stat);
      out.eff_f_crit.push_back(crit);
    }
    acc[hl] = std::move(out);
  });

  MultiplierResult res;
  res.irf.ci_level = spec.ci_level;
  for (const auto& b : plan.blocks) {
    res.irf.states.push_back({b.label, std::vector<HorizonPoint>(H + 1)});
    res.f_labels.push_back(b.label);
    res.effective_f.emplace_back(H + 1, nan_value);
    res.effective_f_crit.emplace_back(H + 1, nan_value);
  }
  for (int h = 0; h <= H; ++h) {
    const auto& ph = acc[h];
    for (size_t i = 0; i < ph.labels.size(); ++i) {
      res.irf.states[i].points[h] = ph.points[i];
      res.effective_f[i][h] = ph.eff_f[i];
      res.effective_f_crit[i][h] = ph.eff_f_crit[i];
    }
    for (size_t i = 0; i < ph.diff_labels.size(); ++i) {
      if (res.irf.diffs.size() <= i)
        res.irf.diffs.push_back({ph.diff_labels[i], std::vector<DiffRow>(H + 1)});
      res.irf.diffs[i].rows[h] = ph.diffs[i];
    }
  }
  return res;
}

/// Formatted difference-table rows at the reporting horizons: the
/// low/baseline state estimate followed by each difference with its stars.
inline std::vector<std::string> difference_table(const IrfResult& result,
                                                 std::vector<int> horizons = {0, 4, 8, 12, 16}) {
  const StateIrf* base = nullptr;
  for (const auto& s : result.states)
    if (s.label == "low" || s.label == "baseline" || s.label == "linear") base = &s;
  if (!base && !result.states.empty()) base = &result.states.front();

  std::vector<std::string> out;
  std::string header = "horizon";
  if (base) header += "\t" + base->label;
  for (const auto& d : result.diffs) header += "\tdiff:" + d.label + "\tstars";
  out.push_back(header);

  char buf[64];
  for (int h : horizons) {
    if (base && h >= static_cast<int>(base->points.size())) continue;
    std::string row = std::to_string(h);
    if (base) {
      std::snprintf(buf, sizeof(buf), "%.4f", base->points[h].estimate);
      row += std::string("\t") + buf;
    }
    for (const auto& d : result.diffs) {
      if (h < static_cast<int>(d.rows.size())) {
        std::snprintf(buf, sizeof(buf), "%.4f", d.rows[h].estimate);
        row += std::string("\t") + buf + "\t" + d.rows[h].stars;
      } else {
        row += "\t\t";
      }
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace lproj
