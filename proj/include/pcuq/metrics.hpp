#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>

namespace pcuq::metrics {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Regression {
  double mse = 0.0;
  double mae = 0.0;
};

Regression regression_metrics(const Vector& y, const Vector& y_hat);

/// Asymmetric exponential penalty on percent error e = 100 (y - y_hat) / y.
/// Late predictions (e > 0) cost exp(e / late) - 1, early ones exp(-e / early) - 1.
struct ScoreConstants {
  double early = 13.0;
  double late = 10.0;
};

struct ScoreResult {
  double value = 0.0;
  std::size_t skipped = 0;  // samples with y == 0
};

ScoreResult score(const Vector& y, const Vector& y_hat, const ScoreConstants& constants = {});

/// Mean Euclidean distance from x to the rows of the training matrix.
double distance_to_training(const Eigen::RowVectorXd& x, const Matrix& training);
Vector distances_to_training(const Matrix& x, const Matrix& training);

inline constexpr double kDegenerateStd = 1e-12;

/// Pearson correlation, or nullopt when either input is (numerically) constant.
std::optional<double> dac(const Vector& distances, const Vector& uncertainties);

/// "-" for an undefined value, fixed 6-significant-digit text otherwise.
std::string format_optional(const std::optional<double>& value);

struct EvalReport {
  double mse = 0.0;
  double mae = 0.0;
  double score = 0.0;
  std::size_t score_skipped = 0;
  std::optional<double> dac;
  std::size_t n_samples = 0;
  Vector y;
  Vector y_hat;
  Vector sigma;
  Vector distance;
};

/// sigma may be empty (no uncertainty), in which case DAC is undefined.
EvalReport evaluate(const Vector& y, const Vector& y_hat, const Vector& sigma, const Vector& distance,
                    const ScoreConstants& constants = {});

}  // namespace pcuq::metrics
