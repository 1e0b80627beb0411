#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "lproj/csv.hpp"
#include "lproj/series.hpp"

namespace lproj {

/// Per-quarter interest charge over all outstanding securities, as a share
/// of GDP: sum_i b_i r_i / GDP_t. Quarters of the GDP index with no records
/// yield 0.
inline Series compute_fiscal_cost(const std::vector<SecurityRecord>& records,
                                  const Series& gdp) {
  Series g = gdp.core();
  for (long i = 0; i < g.size(); ++i)
    if (g.values()[i] <= 0.0)
      throw domain_error("nonpositive GDP at " + (g.start() + static_cast<int>(i)).str());
  Eigen::VectorXd charge = Eigen::VectorXd::Zero(g.size());
  for (const auto& rec : records) {
    int off = rec.quarter - g.start();
    if (off < 0 || off >= g.size())
      throw domain_error("security " + rec.security_id + " dated " + rec.quarter.str() +
                         " is outside the GDP index");
    charge[off] += rec.outstanding * rec.coupon_rate;
  }
  return Series(g.start(), (charge.array() / g.values().array()).matrix());
}

/// Divide a real series by an estimate of potential GDP to induce
/// stationarity.
inline Series gordon_krenn_scale(const Series& x, const Series& potential_gdp) {
  if (x.start() != potential_gdp.start() || x.size() != potential_gdp.size())
    throw domain_error("gordon_krenn_scale: series and potential GDP must share the index");
  Eigen::VectorXd out(x.size());
  for (long i = 0; i < x.size(); ++i) {
    double p = potential_gdp.values()[i];
    double v = x.values()[i];
    if (!std::isfinite(v) || !std::isfinite(p)) {
      out[i] = nan_value;
      continue;
    }
    if (p <= 0.0)
      throw domain_error("nonpositive potential GDP at " +
                         (x.start() + static_cast<int>(i)).str());
    out[i] = v / p;
  }
  return Series(x.start(), std::move(out));
}

struct TrendDecomposition {
  Series trend;
  Series residual;  // series - trend
};

/// OLS fit on [1, t]; residual is orthogonal to the constant and the trend.
inline TrendDecomposition linear_detrend(const Series& x) {
  Series c = x.core();
  long T = c.size();
  if (T < 3) throw domain_error("linear_detrend needs at least 3 observations");
  // Closed-form two-parameter normal equations with t = 1..T.
  double st = 0, stt = 0, sy = 0, sty = 0;
  for (long i = 0; i < T; ++i) {
    double t = static_cast<double>(i + 1);
    st += t;
    stt += t * t;
    sy += c.values()[i];
    sty += t * c.values()[i];
  }
  double n = static_cast<double>(T);
  double det = n * stt - st * st;
  double slope = (n * sty - st * sy) / det;
  double intercept = (sy - slope * st) / n;
  Eigen::VectorXd trend(T), resid(T);
  for (long i = 0; i < T; ++i) {
    trend[i] = intercept + slope * static_cast<double>(i + 1);
    resid[i] = c.values()[i] - trend[i];
  }
  return {Series(c.start(), std::move(trend)), Series(c.start(), std::move(resid))};
}

/// Hodrick-Prescott filter: trend solves (I + lambda D2'D2) tau = y with the
/// unmodified second-difference penalty, via a sparse Cholesky solve.
inline TrendDecomposition hp_filter(const Series& x, double lambda) {
  if (lambda <= 0.0) throw domain_error("hp_filter: lambda must be positive");
  Series c = x.core();
  long n = c.size();
  if (n < 5) throw domain_error("hp_filter needs at least 5 observations");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * n);
  auto add = [&](long i, long j, double v) {
    if (i >= 0 && i < n && j >= 0 && j < n) trip.emplace_back(i, j, v);
  };
  // D2 has rows [1 -2 1]; accumulate I + lambda*D2'D2 band by band.
  for (long i = 0; i < n; ++i) add(i, i, 1.0);
  for (long r = 0; r + 2 < n; ++r) {
    const long idx[3] = {r, r + 1, r + 2};
    const double coef[3] = {1.0, -2.0, 1.0};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) add(idx[a], idx[b], lambda * coef[a] * coef[b]);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success)
    throw estimation_error("hp_filter: penalized system factorization failed");
  Eigen::VectorXd trend = solver.solve(c.values());
  Eigen::VectorXd cycle = c.values() - trend;
  return {Series(c.start(), std::move(trend)), Series(c.start(), std::move(cycle))};
}

enum class StateMode { dummy, logit, continuous };

/// Per-quarter regime weight. Dummy and logit weights live in [0,1];
/// continuous mode carries the raw interaction variable.
struct StateSeries {
  Series series;
  StateMode mode = StateMode::logit;
};

/// Full-sample standard deviation, 1/T normalization.
inline double sample_sd(const Eigen::VectorXd& v) {
  double mean = v.mean();
  double ss = (v.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(v.size()));
}

/// Regime weight from a (detrended) driver series. Logit mode applies
/// F(x) = 1/(1+exp(-gamma*x/sd(x))); dummy mode is the indicator x > 0;
/// continuous mode passes x through. The result is re-anchored `lag`
/// quarters later so that looking it up at t yields the weight dated t-lag.
inline StateSeries build_state(const Series& x, StateMode mode, double gamma = 10.0,
                               int lag = 1) {
  if (lag < 0) throw domain_error("build_state: lag must be nonnegative");
  Series c = x.core();
  Eigen::VectorXd w(c.size());
  switch (mode) {
    case StateMode::dummy:
      for (long i = 0; i < c.size(); ++i) w[i] = c.values()[i] > 0.0 ? 1.0 : 0.0;
      break;
    case StateMode::logit: {
      double sd = sample_sd(c.values());
      if (sd <= 0.0)
        throw domain_error("build_state: constant series, logit transition undefined");
      for (long i = 0; i < c.size(); ++i)
        w[i] = 1.0 / (1.0 + std::exp(-gamma * c.values()[i] / sd));
      break;
    }
    case StateMode::continuous:
      w = c.values();
      break;
  }
  return {Series(c.start(), std::move(w)).shifted(lag), mode};
}

/// Scale a series to unit sample standard deviation without demeaning.
inline Series standardize_shock(const Series& raw) {
  Series c = raw.core();
  double sd = sample_sd(c.values());
  if (sd <= 0.0) throw domain_error("standardize_shock: zero-variance input");
  return Series(c.start(), c.values() / sd);
}

}  // namespace lproj
