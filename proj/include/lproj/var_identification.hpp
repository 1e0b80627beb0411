#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lproj/parallel.hpp"
#include "lproj/rng.hpp"
#include "lproj/series.hpp"
#include "lproj/transforms.hpp"

namespace lproj {

namespace var_detail {

struct VarData {
  Eigen::MatrixXd Y;  // T_eff x n
  Eigen::MatrixXd X;  // T_eff x (1 + n*lags), [1, y_{t-1}, ..., y_{t-p}]
  Quarter first_obs;  // quarter of Y row 0
};

inline VarData build_var_data(const Dataset& ds, const std::vector<std::string>& vars,
                              int lags) {
  if (vars.empty()) throw estimation_error("VAR needs at least one variable");
  Quarter lo = ds.start();
  Quarter hi = ds.end();
  for (const auto& v : vars) {
    Series s = ds.get(v);
    lo = std::max(lo, s.first_valid());
    hi = std::min(hi, s.last_valid());
  }
  long n = static_cast<long>(vars.size());
  long T = (hi - lo + 1) - lags;
  if (T < 1) throw estimation_error("VAR sample is empty after lags");

  VarData d;
  d.first_obs = lo + lags;
  d.Y.resize(T, n);
  d.X.resize(T, 1 + n * lags);
  for (long t = 0; t < T; ++t) {
    Quarter q = d.first_obs + static_cast<int>(t);
    d.X(t, 0) = 1.0;
    for (long j = 0; j < n; ++j) {
      d.Y(t, j) = ds.value(vars[j], q);
      for (int l = 1; l <= lags; ++l) d.X(t, 1 + (l - 1) * n + j) = ds.value(vars[j], q - l);
    }
  }
  return d;
}

/// MA coefficient matrices Psi_0..Psi_hmax from stacked VAR coefficients
/// (layout [c'; A_1'; ...; A_p'], columns = equations).
inline std::vector<Eigen::MatrixXd> ma_coefficients(const Eigen::MatrixXd& B, int n, int lags,
                                                    int hmax) {
  std::vector<Eigen::MatrixXd> A(lags);
  for (int l = 0; l < lags; ++l) A[l] = B.block(1 + l * n, 0, n, n).transpose();
  std::vector<Eigen::MatrixXd> psi(hmax + 1);
  psi[0] = Eigen::MatrixXd::Identity(n, n);
  for (int h = 1; h <= hmax; ++h) {
    psi[h] = Eigen::MatrixXd::Zero(n, n);
    for (int l = 1; l <= std::min(h, lags); ++l) psi[h] += A[l - 1] * psi[h - l];
  }
  return psi;
}

inline Eigen::MatrixXd lower_cholesky(const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw identification_error("innovation covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace var_detail

/// Reduced-form VAR with posterior draws under the diffuse conjugate
/// normal-inverse-Wishart prior.
struct VarModel {
  std::vector<std::string> variables;
  int lags = 4;
  Quarter first_obs;         // quarter of the first innovation row
  Eigen::MatrixXd Y, X;      // estimation data
  Eigen::MatrixXd coef_ols;  // (1+n*lags) x n
  Eigen::MatrixXd sigma_ols;
  struct Draw {
    Eigen::MatrixXd coef;
    Eigen::MatrixXd sigma;
  };
  std::vector<Draw> draws;
  long redraws = 0;  // non-PD covariance draws that were rejected and redrawn
};

/// Posterior sampling of reduced-form parameters. Deterministic given the
/// seed: draw i uses an RNG derived from (seed, i), so any thread count
/// produces the identical draw sequence.
inline VarModel estimate_bvar(const Dataset& ds, const std::vector<std::string>& vars,
                              int lags, long n_draws, std::uint64_t seed, int threads = 1) {
  auto data = var_detail::build_var_data(ds, vars, lags);
  long n = static_cast<long>(vars.size());
  long T = data.Y.rows(), k = data.X.cols();
  if (T <= n * lags + 12)
    throw estimation_error("BVAR sample too short: " + std::to_string(T) + " observations");

  VarModel m;
  m.variables = vars;
  m.lags = lags;
  m.first_obs = data.first_obs;
  m.Y = data.Y;
  m.X = data.X;

  Eigen::MatrixXd XtX = m.X.transpose() * m.X;
  Eigen::LDLT<Eigen::MatrixXd> xtx(XtX);
  m.coef_ols = xtx.solve(m.X.transpose() * m.Y);
  Eigen::MatrixXd U = m.Y - m.X * m.coef_ols;
  Eigen::MatrixXd S = U.transpose() * U;
  m.sigma_ols = S / static_cast<double>(T - k);

  long dof = T - k;
  if (dof <= n + 1) throw estimation_error("BVAR posterior degrees of freedom too small");

  Eigen::MatrixXd XtX_inv = xtx.solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd Lx = var_detail::lower_cholesky(0.5 * (XtX_inv + XtX_inv.transpose()));
  Eigen::MatrixXd S_inv_raw =
      Eigen::LLT<Eigen::MatrixXd>(S).solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd Ls = var_detail::lower_cholesky(0.5 * (S_inv_raw + S_inv_raw.transpose()));

  m.draws.resize(n_draws);
  std::vector<long> redraw_counts(n_draws, 0);
  parallel_for(n_draws, threads, [&](long i) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(i));
    // Inverse-Wishart via the Bartlett factor; redraw on numerically
    // degenerate chi-square deviates.
    Eigen::MatrixXd A(n, n);
    for (;;) {
      bool ok = true;
      A.setZero();
      for (long r = 0; r < n; ++r) {
        double c2 = rng.chi_squared(static_cast<double>(dof - r));
        if (!(c2 > 1e-12)) {
          ok = false;
          break;
        }
        A(r, r) = std::sqrt(c2);
        for (long c = 0; c < r; ++c) A(r, c) = rng.normal();
      }
      if (ok) break;
      ++redraw_counts[i];
    }
    Eigen::MatrixXd Mfac = Ls * A;  // W = M M' ~ Wishart(dof, S^-1)
    Eigen::MatrixXd W = Mfac * Mfac.transpose();
    Eigen::MatrixXd sigma = W.llt().solve(Eigen::MatrixXd::Identity(n, n));
    sigma = 0.5 * (sigma + sigma.transpose());
    Eigen::MatrixXd Z = rng.normal_matrix(k, n);
    Eigen::MatrixXd Lsig = var_detail::lower_cholesky(sigma);
    m.draws[i].coef = m.coef_ols + Lx * Z * Lsig.transpose();
    m.draws[i].sigma = std::move(sigma);
  });
  for (long c : redraw_counts) m.redraws += c;
  return m;
}

/// Recursive (timing) identification: spending ordered first, so the
/// structural spending shock is the spending innovation scaled by the
/// triangular factor. Output is normalized to unit standard deviation.
inline Series timing_shocks(const Dataset& ds, std::vector<std::string> vars, int lags,
                            const std::string& spending_var = "spending") {
  auto it = std::find(vars.begin(), vars.end(), spending_var);
  if (it == vars.end())
    throw identification_error("timing_shocks: '" + spending_var + "' not among variables");
  std::rotate(vars.begin(), it, it + 1);  // spending first

  auto data = var_detail::build_var_data(ds, vars, lags);
  Eigen::MatrixXd coef =
      (data.X.transpose() * data.X).ldlt().solve(data.X.transpose() * data.Y);
  Eigen::MatrixXd U = data.Y - data.X * coef;
  Eigen::MatrixXd sigma = U.transpose() * U / static_cast<double>(U.rows() - data.X.cols());
  Eigen::MatrixXd L = var_detail::lower_cholesky(sigma);
  // e = L^-1 u; with spending first the first structural shock is the
  // spending innovation divided by L(0,0).
  Eigen::MatrixXd E = L.triangularView<Eigen::Lower>()
                          .solve(U.transpose())
                          .transpose();
  return standardize_shock(Series(data.first_obs, E.col(0)));
}

/// One candidate structural model: impact matrix, implied IRFs of the
/// restricted variable, and the structural shock series.
struct StructuralDraw {
  Eigen::MatrixXd impact;  // innovations = impact * structural shocks
  Eigen::MatrixXd shocks;  // T x n
  int shock_col = -1;      // identified spending-shock column
  Eigen::MatrixXd spend_irf;  // (hmax+1) x n: response of spending to each shock
  Quarter first_obs;
};

/// Sign restriction: the spending response to the candidate shock must be
/// positive for horizons 0..horizon_quarters-1 ("at least one year" = 4).
inline bool check_sign(const Eigen::VectorXd& spending_irf_path, int horizon_quarters = 4) {
  for (int h = 0; h < horizon_quarters && h < spending_irf_path.size(); ++h)
    if (!(spending_irf_path[h] > 0.0)) return false;
  return true;
}

inline bool check_sign(const StructuralDraw& draw, int horizon_quarters = 4) {
  if (draw.shock_col < 0) return false;
  return check_sign(draw.spend_irf.col(draw.shock_col).eval(), horizon_quarters);
}

struct NarrativeRestriction {
  Quarter date;
  int shock_sign = +1;     // required sign of the structural shock
  bool dominance = true;   // |own contribution| > |sum of the others|
};

/// Contributions of each structural shock to the one-step-ahead forecast
/// error of variable `var_idx` at row `t`; they sum to the reduced-form
/// innovation by construction.
inline Eigen::VectorXd historical_decomposition(const StructuralDraw& draw, long t,
                                                long var_idx) {
  if (t < 0 || t >= draw.shocks.rows())
    throw identification_error("historical_decomposition: date outside sample");
  return draw.impact.row(var_idx).transpose().cwiseProduct(draw.shocks.row(t).transpose());
}

inline bool check_narrative(const StructuralDraw& draw,
                            const std::vector<NarrativeRestriction>& restrictions,
                            long spend_idx) {
  for (const auto& rest : restrictions) {
    long t = rest.date - draw.first_obs;
    if (t < 0 || t >= draw.shocks.rows())
      throw identification_error("narrative restriction date " + rest.date.str() +
                                 " outside sample");
    double e = draw.shocks(t, draw.shock_col);
    if (rest.shock_sign >= 0 ? !(e > 0.0) : !(e < 0.0)) return false;
    if (rest.dominance) {
      Eigen::VectorXd contrib = historical_decomposition(draw, t, spend_idx);
      double own = contrib[draw.shock_col];
      double others = contrib.sum() - own;
      if (!(std::abs(own) > std::abs(others))) return false;
    }
  }
  return true;
}

struct IdentificationStats {
  long total = 0;
  long sign_accepted = 0;
  long narrative_accepted = 0;
  long ambiguous = 0;  // rotations with multiple sign-satisfying columns
};

namespace var_detail {

/// Builds the candidate structural model for one (coef, sigma, Q) draw and
/// identifies the spending-shock column: the unique column whose spending
/// response satisfies the sign restriction after the positive-impact sign
/// normalization. Multiple qualifying columns reject the draw as ambiguous.
inline std::optional<StructuralDraw> identify_draw(const VarModel::Draw& d,
                                                   const Eigen::MatrixXd& Y,
                                                   const Eigen::MatrixXd& X, Quarter first_obs,
                                                   long spend_idx, int lags, int sign_horizon,
                                                   const Eigen::MatrixXd& Q, bool* ambiguous) {
  long n = Y.cols();
  Eigen::MatrixXd L = lower_cholesky(d.sigma);
  Eigen::MatrixXd impact = L * Q;
  auto psi = ma_coefficients(d.coef, static_cast<int>(n), lags, sign_horizon - 1);

  // Sign-normalize every column to a positive impact on spending.
  for (long j = 0; j < n; ++j)
    if (impact(spend_idx, j) < 0.0) impact.col(j) = -impact.col(j);

  Eigen::MatrixXd spend_irf(sign_horizon, n);
  for (int h = 0; h < sign_horizon; ++h)
    spend_irf.row(h) = (psi[h] * impact).row(spend_idx);

  int found = -1;
  for (long j = 0; j < n; ++j) {
    if (check_sign(spend_irf.col(j).eval(), sign_horizon)) {
      if (found >= 0) {
        *ambiguous = true;
        return std::nullopt;
      }
      found = static_cast<int>(j);
    }
  }
  *ambiguous = false;
  if (found < 0) return std::nullopt;

  StructuralDraw out;
  out.impact = impact;
  out.shock_col = found;
  out.spend_irf = spend_irf;
  out.first_obs = first_obs;
  Eigen::MatrixXd U = Y - X * d.coef;
  out.shocks = impact.partialPivLu().solve(U.transpose()).transpose();
  return out;
}

}  // namespace var_detail

/// Narrative sign-restriction identification. For each posterior draw one
/// uniformly random rotation is checked against the sign restriction and
/// then the narrative restrictions; the accepted spending-shock series are
/// summarized by their per-quarter median and normalized to unit sd.
inline Series narrative_shocks(const VarModel& model,
                               const std::vector<NarrativeRestriction>& restrictions,
                               std::uint64_t seed, IdentificationStats* stats_out = nullptr,
                               int sign_horizon = 4, int threads = 1,
                               const std::string& spending_var = "spending") {
  long n = static_cast<long>(model.variables.size());
  long spend_idx = -1;
  for (long j = 0; j < n; ++j)
    if (model.variables[j] == spending_var) spend_idx = j;
  if (spend_idx < 0)
    throw identification_error("narrative_shocks: '" + spending_var + "' not in model");
  long T = model.Y.rows();
  for (const auto& rest : restrictions) {
    long t = rest.date - model.first_obs;
    if (t < 0 || t >= T)
      throw identification_error("restriction date " + rest.date.str() + " outside sample " +
                                 model.first_obs.str() + ".." +
                                 (model.first_obs + static_cast<int>(T - 1)).str());
  }

  long n_draws = static_cast<long>(model.draws.size());
  IdentificationStats stats;
  stats.total = n_draws;

  struct Slot {
    bool sign_ok = false, narrative_ok = false, ambiguous = false;
    Eigen::VectorXd series;
  };
  std::vector<Slot> slots(n_draws);

  parallel_for(n_draws, threads, [&](long i) {
    Rng rng = Rng::derive(seed ^ 0xabcdef12345678ULL, static_cast<std::uint64_t>(i));
    Eigen::MatrixXd Q = rng.haar_orthogonal(n);
    bool ambiguous = false;
    auto draw = var_detail::identify_draw(model.draws[i], model.Y, model.X, model.first_obs,
                                          spend_idx, model.lags, sign_horizon, Q, &ambiguous);
    Slot& s = slots[i];
    s.ambiguous = ambiguous;
    if (!draw) return;
    s.sign_ok = true;
    if (!check_narrative(*draw, restrictions, spend_idx)) return;
    s.narrative_ok = true;
    Eigen::VectorXd e = draw->shocks.col(draw->shock_col);
    double sd = sample_sd(e);
    s.series = sd > 0.0 ? (e / sd).eval() : e;
  });

  std::vector<const Eigen::VectorXd*> accepted;
  for (const auto& s : slots) {
    if (s.ambiguous) ++stats.ambiguous;
    if (s.sign_ok) ++stats.sign_accepted;
    if (s.narrative_ok) {
      ++stats.narrative_accepted;
      accepted.push_back(&s.series);
    }
  }
  if (stats.narrative_accepted > stats.sign_accepted)
    throw identification_error("internal: narrative-accepted set exceeds sign-accepted set");
  if (stats_out) *stats_out = stats;
  if (accepted.empty())
    throw identification_error(
        "no accepted draws: " + std::to_string(stats.total) + " total, " +
        std::to_string(stats.sign_accepted) + " sign-accepted, " +
        std::to_string(stats.ambiguous) + " ambiguous");

  Eigen::VectorXd median_series(T);
  std::vector<double> tmp(accepted.size());
  for (long t = 0; t < T; ++t) {
    for (size_t a = 0; a < accepted.size(); ++a) tmp[a] = (*accepted[a])[t];
    std::nth_element(tmp.begin(), tmp.begin() + tmp.size() / 2, tmp.end());
    double hi = tmp[tmp.size() / 2];
    if (tmp.size() % 2 == 0) {
      std::nth_element(tmp.begin(), tmp.begin() + tmp.size() / 2 - 1, tmp.end());
      median_series[t] = 0.5 * (hi + tmp[tmp.size() / 2 - 1]);
    } else {
      median_series[t] = hi;
    }
  }
  return standardize_shock(Series(model.first_obs, std::move(median_series)));
}

}  // namespace lproj
