#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lproj/local_projection.hpp"
#include "lproj/parallel.hpp"
#include "lproj/regression.hpp"

namespace lproj {

/// Cardinal B-spline of the given degree evaluated at u, support [0, degree+1).
inline double cardinal_bspline(double u, int degree) {
  if (u < 0.0 || u >= degree + 1.0) return 0.0;
  if (degree == 0) return 1.0;
  double d = static_cast<double>(degree);
  return (u / d) * cardinal_bspline(u, degree - 1) +
         ((d + 1.0 - u) / d) * cardinal_bspline(u - 1.0, degree - 1);
}

/// Cubic B-spline basis on an equidistant knot grid, evaluated at the
/// integer horizons 0..H. K = H + 2 basis functions; the grid is placed so
/// that every evaluated horizon lies inside the partition-of-unity region,
/// which keeps row sums at one and lets the basis reproduce low-order
/// polynomials exactly at the evaluation points.
struct BasisSet {
  int H = 0;
  int K = 0;
  int degree = 3;
  double grid_low = -2.0;
  double grid_high = 0.0;
  double dx = 1.0;
  Eigen::MatrixXd B;  // (H+1) x K
};

inline BasisSet bspline_basis(int H) {
  if (H < 1) throw domain_error("bspline_basis: H must be >= 1");
  BasisSet bs;
  bs.H = H;
  bs.K = H + 2;
  bs.grid_low = -2.0;
  bs.grid_high = static_cast<double>(H) + 1.0;
  // K = segments + degree pins the segment count; H == 1 drops to a
  // quadratic basis because a single segment cannot carry three cubics.
  int nseg = std::max(H - 1, 1);
  bs.degree = (bs.K == nseg + 3) ? 3 : 2;
  bs.dx = (bs.grid_high - bs.grid_low) / static_cast<double>(nseg);
  bs.B.resize(H + 1, bs.K);
  for (int h = 0; h <= H; ++h)
    for (int k = 0; k < bs.K; ++k) {
      // Anchor of spline k: grid_low + (k - degree) * dx.
      double t = bs.grid_low + static_cast<double>(k - bs.degree) * bs.dx;
      bs.B(h, k) = cardinal_bspline((static_cast<double>(h) - t) / bs.dx, bs.degree);
    }
  return bs;
}

/// r-th order difference operator, shape (K-r) x K, binomial rows.
inline Eigen::MatrixXd difference_matrix(int K, int r) {
  if (r < 1 || r >= K) throw domain_error("difference_matrix: need 1 <= r < K");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K - r, K);
  std::vector<double> coef(r + 1);
  coef[0] = 1.0;
  for (int j = 1; j <= r; ++j) coef[j] = coef[j - 1] * static_cast<double>(r - j + 1) / j;
  for (int i = 0; i < K - r; ++i)
    for (int j = 0; j <= r; ++j) D(i, i + j) = ((r - j) % 2 ? -1.0 : 1.0) * coef[j];
  return D;
}

struct PenaltyMatrix {
  int r = 3;
  Eigen::MatrixXd P;  // K x K block D_r' D_r
};

/// Penalty whose null space on the coefficient block is exactly the
/// polynomials of degree < r in the coefficient index.
inline PenaltyMatrix difference_penalty(int K, int r) {
  Eigen::MatrixXd D = difference_matrix(K, r);
  return {r, D.transpose() * D};
}

/// All horizon-h local projections stacked into one system, with every
/// regressor's coefficient expanded in the basis: an original column x
/// contributes the columns x * B_k(h) for k = 1..K.
struct StackedSystem {
  Eigen::VectorXd Z;
  Eigen::MatrixXd X;
  int H = 0;
  int K = 0;
  long cols_per_block = 0;  // original design columns per block
  std::vector<std::string> block_labels;
  std::vector<long> penalty_offsets;  // theta offset of each shock block
  std::vector<int> row_quarter;       // quarter serial per stacked row
  std::vector<int> row_horizon;
  std::vector<std::string> col_labels;
};

inline StackedSystem stack_system(const Dataset& ds, const LpSpec& spec,
                                  const BasisSet& basis) {
  int H = spec.horizon_max;
  if (basis.H != H) throw estimation_error("stack_system: basis built for different H");

  std::vector<Design> designs;
  designs.reserve(H + 1);
  long total_rows = 0;
  for (int h = 0; h <= H; ++h) {
    designs.push_back(build_design(ds, spec, h));
    total_rows += designs.back().y.size();
    if (designs[h].block_labels != designs[0].block_labels)
      throw estimation_error("stack_system: block structure changes across horizons");
  }
  const Design& d0 = designs[0];
  long n_orig = d0.X.cols();
  long K = basis.K;

  StackedSystem sys;
  sys.H = H;
  sys.K = basis.K;
  sys.cols_per_block = d0.cols_per_block;
  sys.block_labels = d0.block_labels;
  for (size_t b = 0; b < d0.block_labels.size(); ++b)
    sys.penalty_offsets.push_back((d0.block_offset[b] + 1) * K);
  for (long j = 0; j < n_orig; ++j)
    for (long k = 0; k < K; ++k)
      sys.col_labels.push_back(d0.col_labels[j] + "|b" + std::to_string(k));

  sys.Z.resize(total_rows);
  sys.X = Eigen::MatrixXd::Zero(total_rows, n_orig * K);
  sys.row_quarter.reserve(total_rows);
  sys.row_horizon.reserve(total_rows);

  long row = 0;
  for (int h = 0; h <= H; ++h) {
    const Design& d = designs[h];
    long T = d.y.size();
    sys.Z.segment(row, T) = d.y;
    for (long j = 0; j < n_orig; ++j)
      for (long k = 0; k < K; ++k) {
        double w = basis.B(h, k);
        if (w != 0.0) sys.X.block(row, j * K + k, T, 1) = d.X.col(j) * w;
      }
    for (long r = 0; r < T; ++r) {
      sys.row_quarter.push_back(d.row_quarters[r].serial());
      sys.row_horizon.push_back(h);
    }
    row += T;
  }
  return sys;
}

/// Penalty over the stacked coefficient vector: D_r'D_r on each shock block,
/// zero elsewhere.
inline Eigen::MatrixXd assemble_penalty(const StackedSystem& sys, const PenaltyMatrix& pen) {
  long n = sys.X.cols();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (long off : sys.penalty_offsets) P.block(off, off, sys.K, sys.K) = pen.P;
  return P;
}

/// Solves (X'X + mu P) theta = X'Z. At mu = 0 a rank-deficient system gets
/// the minimum-norm least-squares solution, since the basis over-parametrizes
/// the H+1 horizon coefficients.
inline Eigen::VectorXd penalized_ls(const Eigen::VectorXd& Z, const Eigen::MatrixXd& X,
                                    const Eigen::MatrixXd& P, double mu) {
  if (mu < 0.0) throw domain_error("penalized_ls: mu must be nonnegative");
  if (mu == 0.0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
    cod.setThreshold(1e-10);
    return cod.solve(Z);
  }
  Eigen::MatrixXd A = X.transpose() * X + mu * P;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw estimation_error("penalized_ls: penalized normal equations are singular");
  return ldlt.solve(X.transpose() * Z);
}

/// Log-spaced shrinkage grid rescaled by the size of X'X relative to P, so
/// the same nominal range works across problem scales.
inline std::vector<double> default_mu_grid(const StackedSystem& sys, const Eigen::MatrixXd& P,
                                           int points = 25, double lo = 1e-4, double hi = 1e6) {
  double px = (sys.X.transpose() * sys.X).norm();
  double pp = P.norm();
  double scale = (pp > 0.0 && px > 0.0) ? px / pp : 1.0;
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) {
    double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    grid[i] = scale * lo * std::pow(hi / lo, f);
  }
  return grid;
}

struct CvResult {
  double mu_star = 0.0;
  std::vector<std::pair<double, double>> curve;  // (mu, out-of-fold squared error)
};

/// k-fold cross-validation over the shrinkage grid. Folds are blocks of
/// quarters (contiguous by default); every stacked row originating from a
/// quarter shares its fold. Ties prefer the heavier shrinkage.
inline CvResult cross_validate(const StackedSystem& sys, const Eigen::MatrixXd& P,
                               std::vector<double> mu_grid, int k, bool contiguous = true,
                               int threads = 1) {
  if (mu_grid.empty()) throw domain_error("cross_validate: empty mu grid");
  std::sort(mu_grid.begin(), mu_grid.end());

  std::vector<int> quarters(sys.row_quarter);
  std::sort(quarters.begin(), quarters.end());
  quarters.erase(std::unique(quarters.begin(), quarters.end()), quarters.end());
  auto folds = kfold_splits(static_cast<long>(quarters.size()), k, contiguous);
  std::map<int, int> fold_of;
  for (size_t f = 0; f < folds.size(); ++f)
    for (long qi : folds[f]) fold_of[quarters[qi]] = static_cast<int>(f);

  long n = sys.X.rows(), p = sys.X.cols();
  std::vector<std::vector<long>> fold_rows(k);
  for (long r = 0; r < n; ++r) fold_rows[fold_of.at(sys.row_quarter[r])].push_back(r);

  // Per-fold Gram pieces; training gram = total - fold.
  Eigen::MatrixXd G = sys.X.transpose() * sys.X;
  Eigen::VectorXd bvec = sys.X.transpose() * sys.Z;
  std::vector<Eigen::MatrixXd> Gf(k);
  std::vector<Eigen::VectorXd> bf(k);
  std::vector<Eigen::MatrixXd> Xf(k);
  std::vector<Eigen::VectorXd> Zf(k);
  for (int f = 0; f < k; ++f) {
    long m = static_cast<long>(fold_rows[f].size());
    Xf[f].resize(m, p);
    Zf[f].resize(m);
    for (long i = 0; i < m; ++i) {
      Xf[f].row(i) = sys.X.row(fold_rows[f][i]);
      Zf[f][i] = sys.Z[fold_rows[f][i]];
    }
    Gf[f] = Xf[f].transpose() * Xf[f];
    bf[f] = Xf[f].transpose() * Zf[f];
  }

  std::vector<double> loss(mu_grid.size(), 0.0);
  parallel_for(static_cast<long>(mu_grid.size()), threads, [&](long mi) {
    double mu = mu_grid[mi];
    double total = 0.0;
    for (int f = 0; f < k; ++f) {
      Eigen::VectorXd theta;
      if (mu == 0.0) {
        // Rebuild the training system; the gram shortcut has no min-norm analog.
        Eigen::MatrixXd Xtr(n - Xf[f].rows(), p);
        Eigen::VectorXd Ztr(n - Xf[f].rows());
        long rr = 0;
        for (long r = 0; r < n; ++r) {
          if (fold_of.at(sys.row_quarter[r]) == f) continue;
          Xtr.row(rr) = sys.X.row(r);
          Ztr[rr++] = sys.Z[r];
        }
        theta = penalized_ls(Ztr, Xtr, P, 0.0);
      } else {
        Eigen::MatrixXd A = G - Gf[f] + mu * P;
        theta = Eigen::LDLT<Eigen::MatrixXd>(A).solve(bvec - bf[f]);
      }
      total += (Zf[f] - Xf[f] * theta).squaredNorm();
    }
    loss[mi] = total;
  });

  CvResult out;
  size_t best = 0;
  for (size_t i = 0; i < mu_grid.size(); ++i) {
    out.curve.emplace_back(mu_grid[i], loss[i]);
    if (loss[i] <= loss[best]) best = i;
  }
  out.mu_star = mu_grid[best];
  return out;
}

struct SlpFit {
  Eigen::VectorXd theta;
  double mu = 0.0;
  int r = 3;  // difference order the fit was penalized with
  CvResult cv;
};

/// Full smooth-LP estimation: penalty assembly, CV for mu, penalized solve.
inline SlpFit slp_fit(const StackedSystem& sys, const PenaltyMatrix& pen,
                      const std::vector<double>& mu_grid, int cv_folds,
                      bool contiguous = true, int threads = 1) {
  Eigen::MatrixXd P = assemble_penalty(sys, pen);
  SlpFit fit;
  fit.r = pen.r;
  if (mu_grid.size() == 1) {
    fit.mu = mu_grid[0];
    fit.cv.mu_star = mu_grid[0];
    fit.cv.curve = {{mu_grid[0], nan_value}};
  } else {
    fit.cv = cross_validate(sys, P, mu_grid, cv_folds, contiguous, threads);
    fit.mu = fit.cv.mu_star;
  }
  fit.theta = penalized_ls(sys.Z, sys.X, P, fit.mu);
  return fit;
}

/// IRFs from a stacked fit: beta_h = sum_k b_k B_k(h) per state, with HAC
/// sandwich standard errors (X'X + mu P)^-1 S (X'X + mu P)^-1 propagated
/// through the basis. S aggregates scores by originating quarter and applies
/// the Bartlett kernel with bandwidth H+1, mirroring the per-horizon rule.
inline IrfResult slp_irf(const StackedSystem& sys, const BasisSet& basis, const SlpFit& fit,
                         const LpSpec& spec, std::vector<double> eval_points = {}) {
  int H = sys.H, K = sys.K;
  long p = sys.X.cols();
  double z = normal_quantile(0.5 + spec.ci_level / 2.0);

  // Bread of the sandwich at the fitted mu, rebuilt with the same penalty
  // order the fit used.
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(p, p);
  if (fit.mu > 0.0) P = assemble_penalty(sys, difference_penalty(K, fit.r));
  Eigen::MatrixXd A = sys.X.transpose() * sys.X + fit.mu * P;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);

  // Quarter-aggregated scores.
  Eigen::VectorXd resid = sys.Z - sys.X * fit.theta;
  std::map<int, Eigen::VectorXd> agg;
  for (long r = 0; r < sys.X.rows(); ++r) {
    auto [it, fresh] = agg.try_emplace(sys.row_quarter[r], Eigen::VectorXd::Zero(p));
    it->second += sys.X.row(r).transpose() * resid[r];
  }
  Eigen::MatrixXd scores(static_cast<long>(agg.size()), p);
  long qi = 0;
  for (const auto& [q, g] : agg) scores.row(qi++) = g.transpose();
  int bw = std::min<int>(H + 1, static_cast<int>(scores.rows()) - 1);
  Eigen::MatrixXd S = bartlett_long_run(scores, bw);
  Eigen::MatrixXd V = ldlt.solve(S);
  V = ldlt.solve(V.transpose());  // (X'X+muP)^-1 S (X'X+muP)^-1

  auto irf_var = [&](const Eigen::VectorXd& sel) { return sel.dot(V * sel); };
  auto block_selector = [&](size_t b, int h) {
    Eigen::VectorXd sel = Eigen::VectorXd::Zero(p);
    long off = sys.penalty_offsets[b];
    for (int k = 0; k < K; ++k) sel[off + k] = basis.B(h, k);
    return sel;
  };

  IrfResult res;
  res.ci_level = spec.ci_level;
  size_t nb = sys.block_labels.size();

  bool continuous = spec.state && spec.state->mode == StateMode::continuous &&
                    !spec.second_state && nb == 2;
  if (continuous) {
    Series core = spec.state->series.core();
    if (eval_points.empty())
      eval_points = {percentile(core.values(), 0.10), percentile(core.values(), 0.90)};
    for (double c : eval_points) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "state=%g", c);
      res.states.push_back({buf, std::vector<HorizonPoint>(H + 1)});
    }
    if (eval_points.size() >= 2)
      res.diffs.push_back({"high-low", std::vector<DiffRow>(H + 1)});
    for (int h = 0; h <= H; ++h) {
      Eigen::VectorXd sa = block_selector(0, h), sb = block_selector(1, h);
      for (size_t e = 0; e < eval_points.size(); ++e) {
        Eigen::VectorXd sel = sa + eval_points[e] * sb;
        res.states[e].points[h] =
            lp_detail::make_point(sel.dot(fit.theta), irf_var(sel), z);
      }
      if (eval_points.size() >= 2) {
        double dc = eval_points.back() - eval_points.front();
        Eigen::VectorXd sel = dc * sb;
        res.diffs[0].rows[h] = lp_detail::make_diff(sel.dot(fit.theta), irf_var(sel));
      }
    }
    return res;
  }

  for (size_t b = 0; b < nb; ++b)
    res.states.push_back({sys.block_labels[b], std::vector<HorizonPoint>(H + 1)});
  bool two_state = nb == 2 && sys.block_labels[0] == "high" && sys.block_labels[1] == "low";
  if (two_state) {
    res.diffs.push_back({"high-low", std::vector<DiffRow>(H + 1)});
  } else if (nb > 1) {
    for (size_t b = 1; b < nb; ++b)
      res.diffs.push_back({sys.block_labels[b], std::vector<DiffRow>(H + 1)});
  }

  for (int h = 0; h <= H; ++h) {
    std::vector<Eigen::VectorXd> sel(nb);
    for (size_t b = 0; b < nb; ++b) {
      sel[b] = block_selector(b, h);
      res.states[b].points[h] =
          lp_detail::make_point(sel[b].dot(fit.theta), irf_var(sel[b]), z);
    }
    if (two_state) {
      Eigen::VectorXd c = sel[0] - sel[1];
      res.diffs[0].rows[h] = lp_detail::make_diff(c.dot(fit.theta), irf_var(c));
    } else if (nb > 1) {
      for (size_t b = 1; b < nb; ++b)
        res.diffs[b - 1].rows[h] = lp_detail::make_diff(sel[b].dot(fit.theta), irf_var(sel[b]));
    }
  }
  return res;
}

}  // namespace lproj
