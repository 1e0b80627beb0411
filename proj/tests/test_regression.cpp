#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "lproj/regression.hpp"
#include "lproj/rng.hpp"

using namespace lproj;

TEST_CASE("ols recovers an exact linear relation") {
  Eigen::MatrixXd X(6, 2);
  X << 1, 2, 1, 3, 1, 5, 1, 7, 1, 11, 1, 13;
  Eigen::VectorXd beta(2);
  beta << 1.0, 2.0;
  Eigen::VectorXd y = X * beta;
  RegressionResult r = ols(y, X);
  CHECK((r.coef - beta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ols: orthogonal outcome gives zero coefficients") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, 1, -1, -1, 1, -1, -1;
  Eigen::VectorXd y(4);
  y << 1, -1, -1, 1;  // orthogonal to both columns
  RegressionResult r = ols(y, X);
  CHECK(r.coef.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ols matches the dense normal-equation solve") {
  Rng rng(17);
  Eigen::MatrixXd X = rng.normal_matrix(50, 3);
  Eigen::VectorXd y = rng.normal_vector(50);
  RegressionResult r = ols(y, X);
  Eigen::VectorXd direct = (X.transpose() * X).fullPivLu().solve(X.transpose() * y);
  CHECK((r.coef - direct).cwiseAbs().maxCoeff() < 1e-10);
  // Residual orthogonality to every design column.
  CHECK((X.transpose() * r.residuals).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ols names offending columns on rank deficiency") {
  Eigen::MatrixXd X(10, 3);
  Rng rng(23);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
    X(i, 2) = 2.0 * X(i, 1);  // collinear
  }
  Eigen::VectorXd y = rng.normal_vector(10);
  std::vector<std::string> names{"const", "x", "x_twice"};
  CHECK_THROWS_WITH_AS(ols(y, X, &names), doctest::Contains("singular design"),
                       singular_design_error);
  try {
    ols(y, X, &names);
  } catch (const singular_design_error& e) {
    std::string msg = e.what();
    bool named = msg.find("x_twice") != std::string::npos || msg.find("x") != std::string::npos;
    CHECK(named);
  }
}

TEST_CASE("newey-west at bandwidth zero equals the White covariance") {
  Rng rng(31);
  Eigen::MatrixXd X = rng.normal_matrix(80, 3);
  Eigen::VectorXd e = rng.normal_vector(80);
  Eigen::MatrixXd V = newey_west(X, e, 0);
  Eigen::MatrixXd bread = (X.transpose() * X).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(3, 3);
  for (int t = 0; t < 80; ++t)
    meat += e[t] * e[t] * X.row(t).transpose() * X.row(t);
  Eigen::MatrixXd white = bread * meat * bread;
  CHECK((V - white).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("newey-west matches the brute-force Bartlett double sum") {
  Rng rng(37);
  long T = 30;
  int L = 4;
  Eigen::MatrixXd X = rng.normal_matrix(T, 2);
  Eigen::VectorXd e = rng.normal_vector(T);
  Eigen::MatrixXd V = newey_west(X, e, L);

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2, 2);
  for (long t = 0; t < T; ++t)
    for (long s = 0; s < T; ++s) {
      long lag = std::abs(t - s);
      if (lag > L) continue;
      double w = 1.0 - static_cast<double>(lag) / (L + 1.0);
      S += w * e[t] * e[s] * X.row(t).transpose() * X.row(s);
    }
  Eigen::MatrixXd bread = (X.transpose() * X).inverse();
  Eigen::MatrixXd direct = bread * S * bread;
  CHECK((V - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("newey-west approaches the classical covariance under iid errors") {
  Rng rng(41);
  long T = 10000;
  Eigen::MatrixXd X(T, 2);
  for (long t = 0; t < T; ++t) {
    X(t, 0) = 1.0;
    X(t, 1) = rng.normal();
  }
  Eigen::VectorXd e = rng.normal_vector(T);
  Eigen::MatrixXd V = newey_west(X, e, 3);
  double s2 = e.squaredNorm() / static_cast<double>(T - 2);
  Eigen::MatrixXd classical = s2 * (X.transpose() * X).inverse();
  for (int i = 0; i < 2; ++i)
    CHECK(V(i, i) == doctest::Approx(classical(i, i)).epsilon(0.05));
}

TEST_CASE("newey-west is positive semidefinite for random fixtures") {
  Rng rng(43);
  for (int rep = 0; rep < 100; ++rep) {
    long T = 20 + static_cast<long>(rng.raw() % 40);
    int k = 2 + static_cast<int>(rng.raw() % 3);
    int bw = static_cast<int>(rng.raw() % 8);
    Eigen::MatrixXd X = rng.normal_matrix(T, k);
    Eigen::VectorXd e = rng.normal_vector(T);
    Eigen::MatrixXd V = newey_west(X, e, bw);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
  }
  Eigen::MatrixXd X = rng.normal_matrix(10, 2);
  Eigen::VectorXd e = rng.normal_vector(10);
  CHECK_THROWS_AS(newey_west(X, e, 10), estimation_error);
}

TEST_CASE("tsls with the endogenous regressor as its own instrument is ols") {
  Rng rng(47);
  long T = 200;
  Eigen::MatrixXd x = rng.normal_matrix(T, 1);
  Eigen::MatrixXd exog(T, 1);
  exog.setOnes();
  Eigen::VectorXd y = 2.0 * x.col(0) + rng.normal_vector(T);
  IVResult iv = tsls(y, x, x, exog, 2);
  Eigen::MatrixXd X(T, 2);
  X << x, exog;
  RegressionResult direct = ols(y, X);
  CHECK(std::abs(iv.second_stage.coef[0] - direct.coef[0]) < 1e-10);
  CHECK(std::abs(iv.second_stage.coef[1] - direct.coef[1]) < 1e-10);
}

TEST_CASE("just-identified tsls is the Wald ratio") {
  Rng rng(53);
  long T = 300;
  Eigen::VectorXd z = rng.normal_vector(T);
  Eigen::VectorXd x(T), y(T);
  for (long t = 0; t < T; ++t) {
    x[t] = 0.8 * z[t] + rng.normal();
    y[t] = 1.7 * x[t] + rng.normal();
  }
  Eigen::MatrixXd exog(T, 1);
  exog.setOnes();
  IVResult iv = tsls(y, x, z, exog, 0);
  double zbar = z.mean(), xbar = x.mean(), ybar = y.mean();
  double czy = 0, czx = 0;
  for (long t = 0; t < T; ++t) {
    czy += (z[t] - zbar) * (y[t] - ybar);
    czx += (z[t] - zbar) * (x[t] - xbar);
  }
  CHECK(iv.second_stage.coef[0] == doctest::Approx(czy / czx).epsilon(1e-10));
  // Equivalently the ratio of the two reduced-form slopes.
  Eigen::MatrixXd Zc(T, 2);
  Zc << z, exog;
  double rf = ols(y, Zc).coef[0], fs = ols(x, Zc).coef[0];
  CHECK(iv.second_stage.coef[0] == doctest::Approx(rf / fs).epsilon(1e-10));
}

TEST_CASE("irrelevant instruments are flagged weak") {
  Rng rng(59);
  long T = 400;
  Eigen::VectorXd z = rng.normal_vector(T);   // pure noise
  Eigen::VectorXd x = rng.normal_vector(T);   // unrelated endogenous
  Eigen::VectorXd y = x + rng.normal_vector(T);
  Eigen::MatrixXd exog(T, 1);
  exog.setOnes();
  IVResult iv = tsls(y, x, z, exog, 0);
  CHECK(iv.effective_f_stat < iv.effective_f_critical);
  CHECK(iv.weak_instruments);
}

TEST_CASE("tsls under-identification error") {
  Rng rng(61);
  Eigen::MatrixXd endog = rng.normal_matrix(50, 2);
  Eigen::MatrixXd instr = rng.normal_matrix(50, 1);
  Eigen::MatrixXd exog(50, 1);
  exog.setOnes();
  Eigen::VectorXd y = rng.normal_vector(50);
  CHECK_THROWS_AS(tsls(y, endog, instr, exog, 0), estimation_error);
}

TEST_CASE("effective F equals the conventional F under homoskedastic errors") {
  Rng rng(67);
  long T = 5000;
  Eigen::VectorXd z = rng.normal_vector(T);
  Eigen::VectorXd x(T);
  for (long t = 0; t < T; ++t) x[t] = 0.25 * z[t] + rng.normal();
  RegressionResult fs = ols(x, z);
  // Conventional first-stage F with one instrument: classical t^2.
  double conventional = fs.coef[0] * fs.coef[0] / fs.cov(0, 0);
  Eigen::MatrixXd W = newey_west(z, fs.residuals, 0);
  auto [stat, crit] = effective_f(fs.coef, z, W);
  CHECK(stat == doctest::Approx(conventional).epsilon(0.02));
  CHECK(crit == doctest::Approx(23.108511211606643));
}

TEST_CASE("effective F is ~zero when the first stage is null") {
  Rng rng(71);
  long T = 500;
  Eigen::VectorXd z = rng.normal_vector(T);
  Eigen::VectorXd x = rng.normal_vector(T);
  // Remove the z-component exactly so the first-stage coefficient is zero.
  x -= z * (z.dot(x) / z.squaredNorm());
  RegressionResult fs = ols(x, z);
  Eigen::MatrixXd W = newey_west(z, fs.residuals, 0);
  auto [stat, crit] = effective_f(fs.coef, z, W);
  CHECK(stat < 1e-20);
  CHECK(stat >= 0.0);
  CHECK(crit > 0.0);
}

TEST_CASE("effective F critical values are tabulated for one and two instruments") {
  CHECK(effective_f_critical_value(1) == doctest::Approx(23.108511211606643));
  CHECK(effective_f_critical_value(2) == doctest::Approx(19.294343449962533));
  CHECK_THROWS_AS(effective_f_critical_value(3), estimation_error);
}

TEST_CASE("kfold splits") {
  auto even = kfold_splits(10, 5);
  for (const auto& f : even) CHECK(f.size() == 2);

  auto uneven = kfold_splits(11, 5);
  CHECK(uneven[0].size() == 3);
  for (int f = 1; f < 5; ++f) CHECK(uneven[f].size() == 2);

  // Union covers everything, pairwise disjoint.
  std::vector<int> seen(11, 0);
  for (const auto& f : uneven)
    for (long i : f) seen[i]++;
  for (int c : seen) CHECK(c == 1);

  // Contiguity of the default mode.
  for (const auto& f : uneven)
    for (size_t i = 1; i < f.size(); ++i) CHECK(f[i] == f[i - 1] + 1);

  auto interleaved = kfold_splits(10, 3, false);
  CHECK(interleaved[0][1] == 3);

  CHECK_THROWS_AS(kfold_splits(5, 1), domain_error);
  CHECK_THROWS_AS(kfold_splits(5, 6), domain_error);
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {0.005, 0.05, 0.1, 0.5, 0.9, 0.95, 0.995}) {
    double x = normal_quantile(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-9));
  CHECK(significance_stars(0.009) == "***");
  CHECK(significance_stars(0.04) == "**");
  CHECK(significance_stars(0.08) == "*");
  CHECK(significance_stars(0.5) == "");
}
