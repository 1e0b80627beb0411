#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

#include "lproj/common.hpp"

namespace lproj {

// Deterministic random draws. std::mt19937_64 is fully specified by the
// standard, and the transforms below are written out explicitly rather than
// delegating to std::*_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Independent stream for a (seed, index) pair; used to derive per-draw
  /// generators so parallel work gives identical results at any thread count.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL)));
  }

  double uniform() {
    // 53-bit mantissa in [0,1).
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    // Box-Muller; one deviate per call keeps the draw count predictable.
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Marsaglia-Tsang gamma with unit scale.
  double gamma(double shape) {
    if (shape <= 0.0) throw domain_error("gamma shape must be positive");
    if (shape < 1.0) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

  Eigen::VectorXd normal_vector(long n) {
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::MatrixXd normal_matrix(long rows, long cols) {
    Eigen::MatrixXd m(rows, cols);
    for (long j = 0; j < cols; ++j)
      for (long i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  /// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
  /// sign convention diag(R) > 0.
  Eigen::MatrixXd haar_orthogonal(long n) {
    Eigen::MatrixXd g = normal_matrix(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (long j = 0; j < n; ++j)
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
  }

  std::uint64_t raw() { return eng_(); }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 eng_;
};

}  // namespace lproj
