#pragma once

// Independent reference computations shared by the test binaries.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>

namespace oracle {

using Matrix = Eigen::MatrixXd;

/// Central differences of a scalar function of a matrix argument.
inline Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double keep = xp(i, j);
      xp(i, j) = keep + h;
      const double fp = f(xp);
      xp(i, j) = keep - h;
      const double fm = f(xp);
      xp(i, j) = keep;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

/// max |a - b| / max(|b|, floor), elementwise.
inline double max_rel_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(std::abs(b(i, j)), floor));
    }
  }
  return worst;
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  }
  return m;
}

/// log Gamma from the Stirling series after shifting x above 20, in long double.
inline long double log_gamma_reference(long double x) {
  long double shift = 0.0L;
  while (x < 20.0L) {
    shift -= std::log(x);
    x += 1.0L;
  }
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double inv = 1.0L / x;
  const long double inv2 = inv * inv;
  // Bernoulli-number coefficients B_2k / (2k (2k - 1)).
  const long double series = inv * (1.0L / 12 - inv2 * (1.0L / 360 - inv2 * (1.0L / 1260 - inv2 * (1.0L / 1680 - inv2 * (1.0L / 1188 - inv2 * (691.0L / 360360 - inv2 * (1.0L / 156)))))));
  return shift + (x - 0.5L) * std::log(x) - x + 0.5L * std::log(2.0L * pi) + series;
}

}  // namespace oracle
