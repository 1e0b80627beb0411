#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lproj/common.hpp"

namespace lproj {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double two_sided_pvalue(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

/// Inverse standard normal CDF (Acklam's rational approximation plus one
/// Halley refinement; accurate to near machine precision).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw domain_error("normal_quantile: p outside (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  // Halley step against the forward CDF.
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

inline std::string significance_stars(double pvalue) {
  if (pvalue < 0.01) return "***";
  if (pvalue < 0.05) return "**";
  if (pvalue < 0.10) return "*";
  return "";
}

struct RegressionResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd cov;  // classical sigma^2 (X'X)^-1 unless replaced by a HAC caller
  long nobs = 0;
  long dof = 0;
  double sigma2 = 0.0;
};

/// Least squares via column-pivoted QR. Rank deficiency is an error naming
/// the offending (non-pivot) columns rather than silently dropping them.
inline RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                            const std::vector<std::string>* col_names = nullptr) {
  long n = X.rows(), k = X.cols();
  if (y.size() != n) throw estimation_error("ols: y and X row counts differ");
  if (n <= k) throw estimation_error("ols: need more rows than columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (long j = qr.rank(); j < k; ++j) {
      long orig = perm[j];
      if (!cols.empty()) cols += ", ";
      cols += (col_names && orig < static_cast<long>(col_names->size()))
                  ? (*col_names)[orig]
                  : ("col" + std::to_string(orig));
    }
    throw singular_design_error("singular design, offending columns: " + cols);
  }

  RegressionResult out;
  out.coef = qr.solve(y);
  out.residuals = y - X * out.coef;
  out.nobs = n;
  out.dof = n - k;
  out.sigma2 = out.residuals.squaredNorm() / static_cast<double>(out.dof);
  Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  out.cov = out.sigma2 * xtx_inv;
  return out;
}

/// Bartlett-weighted long-run covariance of a score sequence:
/// S = G0 + sum_{l=1..L} (1 - l/(L+1)) (G_l + G_l').
inline Eigen::MatrixXd bartlett_long_run(const Eigen::MatrixXd& scores, int bandwidth) {
  long T = scores.rows(), k = scores.cols();
  if (bandwidth < 0) throw estimation_error("bartlett_long_run: negative bandwidth");
  if (bandwidth >= T) throw estimation_error("bartlett_long_run: bandwidth >= nobs");
  Eigen::MatrixXd S = scores.transpose() * scores;
  for (int l = 1; l <= bandwidth; ++l) {
    double w = 1.0 - static_cast<double>(l) / static_cast<double>(bandwidth + 1);
    Eigen::MatrixXd G = scores.bottomRows(T - l).transpose() * scores.topRows(T - l);
    S += w * (G + G.transpose());
  }
  return 0.5 * (S + S.transpose());  // enforce exact symmetry
}

/// Newey-West HAC coefficient covariance (X'X)^-1 S (X'X)^-1 with S the
/// Bartlett-weighted sum of autocovariances of the score x_t e_t.
/// bandwidth 0 reduces to the White heteroskedasticity-robust form.
inline Eigen::MatrixXd newey_west(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                                  int bandwidth) {
  long n = X.rows(), k = X.cols();
  if (residuals.size() != n) throw estimation_error("newey_west: residual length mismatch");
  Eigen::MatrixXd scores = X.array().colwise() * residuals.array();
  Eigen::MatrixXd S = bartlett_long_run(scores, bandwidth);
  Eigen::MatrixXd bread =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd V = bread * S * bread;
  return 0.5 * (V + V.transpose());
}

// Montiel Olea-Pflueger worst-case critical values for the effective F
// statistic, tau = 10% Nagar-bias benchmark at the 5% level:
// quantile_{0.95}(chi2_q(ncp = q/tau)) / q. See docs/effective_f.md.
inline double effective_f_critical_value(int n_instruments) {
  switch (n_instruments) {
    case 1: return 23.108511211606643;
    case 2: return 19.294343449962533;
    default:
      throw estimation_error(
          "effective F critical values are tabulated for 1 or 2 instruments, got " +
          std::to_string(n_instruments));
  }
}

/// Montiel Olea-Pflueger effective first-stage F for a single endogenous
/// regressor. `instruments` must already have the exogenous block partialled
/// out; `pi` are the corresponding first-stage coefficients and `hac_cov`
/// their HAC covariance. Returns (statistic, critical value).
inline std::pair<double, double> effective_f(const Eigen::VectorXd& pi,
                                             const Eigen::MatrixXd& instruments,
                                             const Eigen::MatrixXd& hac_cov) {
  long q = pi.size();
  if (instruments.cols() != q || hac_cov.rows() != q || hac_cov.cols() != q)
    throw estimation_error("effective_f: dimension mismatch");
  Eigen::MatrixXd Qz = instruments.transpose() * instruments;
  double num = pi.dot(Qz * pi);
  double den = (hac_cov * Qz).trace();
  if (den <= 0.0) throw estimation_error("effective_f: nonpositive trace normalization");
  return {num / den, effective_f_critical_value(static_cast<int>(q))};
}

struct IVResult {
  RegressionResult second_stage;           // coefficients ordered [endogenous, exogenous]
  std::vector<RegressionResult> first_stage;  // one per endogenous regressor
  Eigen::MatrixXd hac_cov;                 // HAC covariance of the second stage
  double effective_f_stat = nan_double();
  double effective_f_critical = nan_double();
  bool weak_instruments = false;

  static double nan_double() { return std::numeric_limits<double>::quiet_NaN(); }
};

/// Two-stage least squares. First-stage fitted endogenous regressors are
/// combined with the exogenous block; the HAC covariance uses the IV score
/// xhat_t * (y_t - x_t'beta) with the actual regressors in the residual.
/// With one endogenous regressor the effective F diagnostic is filled in.
inline IVResult tsls(const Eigen::VectorXd& y, const Eigen::MatrixXd& endogenous,
                     const Eigen::MatrixXd& instruments, const Eigen::MatrixXd& exogenous,
                     int bandwidth) {
  long n = y.size();
  long n_en = endogenous.cols(), n_in = instruments.cols(), n_ex = exogenous.cols();
  if (endogenous.rows() != n || instruments.rows() != n ||
      (n_ex > 0 && exogenous.rows() != n))
    throw estimation_error("tsls: row count mismatch");
  if (n_in < n_en)
    throw estimation_error("tsls: under-identified, " + std::to_string(n_in) +
                           " instruments for " + std::to_string(n_en) + " endogenous");

  Eigen::MatrixXd Zx(n, n_in + n_ex);
  Zx.leftCols(n_in) = instruments;
  if (n_ex > 0) Zx.rightCols(n_ex) = exogenous;

  IVResult out;
  Eigen::MatrixXd fitted(n, n_en);
  for (long j = 0; j < n_en; ++j) {
    RegressionResult fs = ols(endogenous.col(j), Zx);
    fitted.col(j) = endogenous.col(j) - fs.residuals;
    out.first_stage.push_back(std::move(fs));
  }

  Eigen::MatrixXd Xhat(n, n_en + n_ex);
  Xhat.leftCols(n_en) = fitted;
  if (n_ex > 0) Xhat.rightCols(n_ex) = exogenous;
  out.second_stage = ols(y, Xhat);

  // Residuals against the actual (not fitted) regressors.
  Eigen::MatrixXd Xact(n, n_en + n_ex);
  Xact.leftCols(n_en) = endogenous;
  if (n_ex > 0) Xact.rightCols(n_ex) = exogenous;
  Eigen::VectorXd eps = y - Xact * out.second_stage.coef;
  out.second_stage.residuals = eps;

  Eigen::MatrixXd scores = Xhat.array().colwise() * eps.array();
  Eigen::MatrixXd S = bartlett_long_run(scores, bandwidth);
  long k = Xhat.cols();
  Eigen::MatrixXd bread =
      (Xhat.transpose() * Xhat).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  out.hac_cov = bread * S * bread;
  out.hac_cov = 0.5 * (out.hac_cov + out.hac_cov.transpose());
  out.second_stage.cov = out.hac_cov;

  if (n_en == 1 && n_in <= 2) {
    // Partial the exogenous block out of instruments and endogenous, then
    // form the robust first-stage statistic.
    Eigen::MatrixXd Zt = instruments;
    Eigen::VectorXd xt = endogenous.col(0);
    if (n_ex > 0) {
      Eigen::MatrixXd proj =
          exogenous * (exogenous.transpose() * exogenous)
                          .ldlt()
                          .solve(exogenous.transpose() * Zx.leftCols(n_in));
      Zt -= proj;
      xt -= exogenous * (exogenous.transpose() * exogenous)
                            .ldlt()
                            .solve(exogenous.transpose() * endogenous.col(0));
    }
    RegressionResult pfs = ols(xt, Zt);
    Eigen::MatrixXd W = newey_west(Zt, pfs.residuals, bandwidth);
    auto [stat, crit] = effective_f(pfs.coef, Zt, W);
    out.effective_f_stat = stat;
    out.effective_f_critical = crit;
    out.weak_instruments = stat < crit;
  }
  return out;
}

/// Disjoint folds covering 0..nobs-1. Contiguous blocks respect serial
/// dependence; the alternative interleaves observations round-robin.
inline std::vector<std::vector<long>> kfold_splits(long nobs, int k, bool contiguous = true) {
  if (k < 2 || k > nobs) throw domain_error("kfold_splits: k out of range");
  std::vector<std::vector<long>> folds(k);
  if (contiguous) {
    long base = nobs / k, extra = nobs % k, pos = 0;
    for (int f = 0; f < k; ++f) {
      long len = base + (f < extra ? 1 : 0);
      for (long i = 0; i < len; ++i) folds[f].push_back(pos++);
    }
  } else {
    for (long i = 0; i < nobs; ++i) folds[i % k].push_back(i);
  }
  return folds;
}

}  // namespace lproj
