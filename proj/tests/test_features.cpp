#include "doctest.h"
#include "oracles.hpp"

#include "pcuq/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>

using namespace pcuq::features;

namespace {

// Direct summation of a^{-1/2} sum_t x[t] conj(psi((t - b)/a)) over |t - b| <= 5a.
ComplexMatrix cwt_oracle(const Vector& x, const ScaleGrid& grid) {
  const double pi = std::numbers::pi;
  ComplexMatrix out(static_cast<Eigen::Index>(grid.size()), x.size());
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const double a = grid.scales[s];
    for (Eigen::Index b = 0; b < x.size(); ++b) {
      std::complex<double> acc = 0.0;
      for (Eigen::Index t = 0; t < x.size(); ++t) {
        const double tau = static_cast<double>(t - b) / a;
        if (std::abs(tau) > 5.0) continue;
        const std::complex<double> psi = std::pow(pi, -0.25) * std::exp(std::complex<double>(0.0, 6.0 * tau)) *
                                         std::exp(-0.5 * tau * tau);
        acc += x(t) * std::conj(psi);
      }
      out(static_cast<Eigen::Index>(s), b) = acc / std::sqrt(a);
    }
  }
  return out;
}

ScaleGrid small_grid() { return scale_grid(morlet_center_frequency(), 500.0, 10000.0, 1.0 / 25600.0, 12); }

Vector tone(double f, Eigen::Index n, double fs, double phase = 0.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return v;
}

}  // namespace

TEST_CASE("segment_windows") {
  const Vector s = Vector::LinSpaced(10, 0.0, 9.0);
  CHECK(segment_windows(s, 5, 5).size() == 2);
  const auto w = segment_windows(s, 5, 2);
  REQUIRE(w.size() == 3);
  CHECK(w[2](0) == 4.0);
  CHECK(w[1](4) == 6.0);
  CHECK(segment_windows(Vector::Zero(25600), 2560, 2560).size() == 10);
  CHECK_THROWS_AS(segment_windows(Vector(), 5, 5), std::invalid_argument);
  CHECK_THROWS_AS(segment_windows(s, 11, 1), std::invalid_argument);
  CHECK_THROWS_AS(segment_windows(s, 5, 0), std::invalid_argument);
}

TEST_CASE("scale_grid") {
  CHECK(morlet_center_frequency() == doctest::Approx(6.0 / (2.0 * std::numbers::pi)));
  const ScaleGrid g = scale_grid(0.9549, 100.0, 12800.0, 1.0 / 25600.0, 64);
  REQUIRE(g.size() == 64);
  CHECK(g.scales.front() == doctest::Approx(1.9098).epsilon(1e-12));
  CHECK(g.frequency(0) == doctest::Approx(12800.0).epsilon(1e-9));
  CHECK(g.frequency(63) == doctest::Approx(100.0).epsilon(1e-9));
  const double ratio = g.scales[1] / g.scales[0];
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g.scales[i] / g.scales[i - 1] == doctest::Approx(ratio).epsilon(1e-12));
    CHECK(g.frequency(i) < g.frequency(i - 1));
  }
  CHECK_THROWS_AS(scale_grid(0.9549, 500.0, 500.0, 1e-4, 8), std::invalid_argument);
  CHECK_THROWS_AS(scale_grid(0.9549, 0.0, 500.0, 1e-4, 8), std::invalid_argument);
  CHECK_THROWS_AS(scale_grid(0.9549, 100.0, 500.0, 0.0, 8), std::invalid_argument);
}

TEST_CASE("morlet_cwt: matches direct summation, zero and impulse inputs") {
  const ScaleGrid g = small_grid();
  CHECK(morlet_cwt(Vector::Zero(64), g).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(1);
  const Vector x = oracle::random_matrix(96, 1, rng);
  CHECK((morlet_cwt(x, g) - cwt_oracle(x, g)).cwiseAbs().maxCoeff() < 1e-12);

  Vector impulse = Vector::Zero(80);
  const Eigen::Index k = 30;
  impulse(k) = 1.0;
  const ComplexMatrix w = morlet_cwt(impulse, g);
  for (std::size_t s = 0; s < g.size(); ++s) {
    const double a = g.scales[s];
    for (Eigen::Index b = 0; b < 80; ++b) {
      const double tau = static_cast<double>(k - b) / a;
      const std::complex<double> expected =
          std::abs(tau) > 5.0 ? std::complex<double>(0.0) : std::conj(morlet(tau)) / std::sqrt(a);
      CHECK(std::abs(w(static_cast<Eigen::Index>(s), b) - expected) < 1e-14);
    }
  }
}

TEST_CASE("morlet_cwt: linearity") {
  const ScaleGrid g = small_grid();
  std::mt19937_64 rng(2);
  const Vector x = oracle::random_matrix(64, 1, rng);
  const Vector y = oracle::random_matrix(64, 1, rng);
  const ComplexMatrix lhs = morlet_cwt(2.5 * x - 0.7 * y, g);
  const ComplexMatrix rhs = 2.5 * morlet_cwt(x, g) - 0.7 * morlet_cwt(y, g);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("morlet_cwt: a pure tone peaks at the matching scale") {
  const double fs = 25600.0;
  const ScaleGrid g = scale_grid(morlet_center_frequency(), 100.0, 0.99 * fs / 2.0, 1.0 / fs, 64);
  for (double f0 : {300.0, 1000.0, 2500.0, 6000.0, 11000.0}) {
    const Vector x = tone(f0, 2560, fs);
    const WindowFeatures wf = window_features(morlet_cwt(x, g), x, g);
    const double target = morlet_center_frequency() / (f0 / fs);
    std::size_t nearest = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(std::log(g.scales[i] / target)) < std::abs(std::log(g.scales[nearest] / target))) nearest = i;
    }
    std::size_t got = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.frequency(i) == wf.dominant_frequency) got = i;
    }
    CHECK(std::abs(static_cast<int>(got) - static_cast<int>(nearest)) <= 1);
    CHECK(wf.dominant_frequency >= 100.0 - 1e-9);
    CHECK(wf.dominant_frequency <= 0.99 * fs / 2.0 + 1e-9);
  }
}

TEST_CASE("window energy is robust to circular shifts of a periodic window") {
  const double fs = 25600.0;
  const ScaleGrid g = scale_grid(morlet_center_frequency(), 400.0, 12000.0, 1.0 / fs, 32);
  // 1280 Hz tone: exactly 128 periods per 2560-sample window.
  Vector x = tone(1280.0, 2560, fs) + 0.5 * tone(3200.0, 2560, fs, 0.3);
  const double e0 = window_features(morlet_cwt(x, g), x, g).log_energy;
  for (int shift : {7, 133, 900}) {
    Vector y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y((i + shift) % x.size()) = x(i);
    const double e = window_features(morlet_cwt(y, g), y, g).log_energy;
    CHECK(std::abs(std::exp(e - e0) - 1.0) < 0.01);
  }
}

TEST_CASE("window_features: degenerate and analytic cases") {
  const ScaleGrid g = small_grid();
  const Vector zero = Vector::Zero(128);
  const WindowFeatures z = window_features(morlet_cwt(zero, g), zero, g);
  CHECK(z.log_energy == doctest::Approx(std::log(1e-12)));
  CHECK(z.mean == 0.0);
  CHECK(z.std == 0.0);
  CHECK(z.entropy == 0.0);
  CHECK(z.kurtosis == 0.0);
  CHECK(z.skewness == 0.0);

  Vector sym(101);
  for (Eigen::Index i = 0; i < 101; ++i) sym(i) = std::pow(static_cast<double>(i - 50), 3) / 1000.0 + 2.0;
  const WindowFeatures s = window_features(morlet_cwt(sym, g), sym, g);
  CHECK(std::abs(s.skewness) < 1e-12);
  CHECK(s.mean == doctest::Approx(2.0));

  Vector uniform(64 * 10);
  for (Eigen::Index i = 0; i < uniform.size(); ++i) uniform(i) = (static_cast<double>(i % 64) + 0.5) / 64.0;
  CHECK(histogram_entropy(uniform) == doctest::Approx(std::log(64.0)).epsilon(1e-12));

  std::mt19937_64 rng(3);
  const Vector gauss = oracle::random_matrix(200000, 1, rng);
  const WindowFeatures gf = window_features(ComplexMatrix::Zero(static_cast<Eigen::Index>(g.size()), gauss.size()), gauss, g);
  CHECK(gf.kurtosis == doctest::Approx(3.0).epsilon(0.02));
  CHECK(std::abs(gf.skewness) < 0.02);
  CHECK(gf.std == doctest::Approx(1.0).epsilon(0.01));
  CHECK(gf.entropy > 0.0);

  // Energy is the sum of squared coefficient magnitudes.
  const Vector x = oracle::random_matrix(64, 1, rng);
  const ComplexMatrix c = morlet_cwt(x, g);
  CHECK(window_features(c, x, g).log_energy == doctest::Approx(std::log(c.cwiseAbs2().sum())).epsilon(1e-12));
  CHECK_THROWS_AS(window_features(c, Vector::Zero(63), g), std::invalid_argument);
}

TEST_CASE("extract_dataset: layout, symmetry, determinism") {
  FeatureConfig cfg;
  cfg.n_scales = 8;
  cfg.window_len = 256;
  cfg.stride = 256;

  const auto zero = extract_dataset(std::vector<Vector>{Vector::Zero(256)}, std::vector<Vector>{Vector::Zero(256)}, {5.0}, {300.0}, cfg);
  REQUIRE(zero.rows() == 1);
  REQUIRE(zero.cols() == 16);
  CHECK(zero(0, 0) == doctest::Approx(std::log(1e-12)));
  CHECK(zero(0, 7) == doctest::Approx(std::log(1e-12)));
  CHECK(zero(0, kTimeColumn) == 0.0);
  CHECK(zero(0, kTemperatureColumn) == 300.0);

  std::mt19937_64 rng(4);
  std::vector<Vector> h, v;
  std::vector<double> t, temp;
  for (int i = 0; i < 5; ++i) {
    h.push_back(oracle::random_matrix(256, 1, rng, 1.0 + i));
    v.push_back(h.back());
    t.push_back(10.0 * i + 3.0);
    temp.push_back(300.0 + i);
  }
  const Matrix m = extract_dataset(h, v, t, temp, cfg);
  CHECK(m.rows() == 5);
  CHECK(m.leftCols(7) == m.middleCols(7, 7));
  CHECK(m(0, kTimeColumn) == 0.0);
  CHECK(m(4, kTimeColumn) == 1.0);
  CHECK(m(2, kTimeColumn) == doctest::Approx(0.5));
  CHECK(m(3, kTemperatureColumn) == 303.0);

  std::vector<Vector> hr(h.rbegin(), h.rend()), vr(v.rbegin(), v.rend());
  std::vector<double> tr(t.rbegin(), t.rend()), tempr(temp.rbegin(), temp.rend());
  const Matrix r = extract_dataset(hr, vr, tr, tempr, cfg);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(r.row(4 - i) == m.row(i));

  Vector cont(256 * 3 + 17);
  for (Eigen::Index i = 0; i < cont.size(); ++i) cont(i) = std::sin(0.3 * static_cast<double>(i));
  CHECK(extract_dataset(cont, cont, {0.0, 1.0, 2.0}, {300.0, 300.0, 300.0}, cfg).rows() == 3);

  CHECK_THROWS_AS(extract_dataset(h, v, {1.0}, temp, cfg), std::invalid_argument);
  v[1] = Vector::Zero(255);
  CHECK_THROWS_AS(extract_dataset(h, v, t, temp, cfg), std::invalid_argument);
}

TEST_CASE("normalization: z-scores every column but time") {
  std::mt19937_64 rng(5);
  Matrix raw = oracle::random_matrix(50, 16, rng, 3.0);
  raw.col(kTimeColumn) = Vector::LinSpaced(50, 0.0, 1.0);
  raw.col(3).setConstant(7.0);
  raw.col(kTemperatureColumn).array() += 300.0;
  const Normalization n = fit_normalization(raw);
  const Matrix z = n.apply(raw);
  for (Eigen::Index j = 0; j < 16; ++j) {
    if (j == kTimeColumn) {
      CHECK(z.col(j) == raw.col(j));
    } else if (j == 3) {
      CHECK(z.col(j).cwiseAbs().maxCoeff() == 0.0);
    } else {
      CHECK(std::abs(z.col(j).mean()) < 1e-12);
      CHECK(std::sqrt(z.col(j).squaredNorm() / 50.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(n.scale(3) == 1.0);
  CHECK_THROWS_AS(n.apply(Matrix::Zero(2, 15)), std::invalid_argument);
  CHECK_THROWS_AS(fit_normalization(Matrix::Zero(0, 16)), std::invalid_argument);

  const auto names = feature_names();
  REQUIRE(names.size() == 16);
  CHECK(names[kTimeColumn] == "t");
  CHECK(names[kTemperatureColumn] == "T");
  CHECK(names[0] == "h_log_energy");
  CHECK(names[7] == "v_log_energy");
}
