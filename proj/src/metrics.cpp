#include "pcuq/metrics.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace pcuq::metrics {

namespace {

void check_lengths(const Vector& a, const Vector& b, const char* where) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(where) + ": length mismatch");
  if (a.size() == 0) throw std::invalid_argument(std::string(where) + ": empty input");
}

}  // namespace

Regression regression_metrics(const Vector& y, const Vector& y_hat) {
  check_lengths(y, y_hat, "regression_metrics");
  const Eigen::ArrayXd r = (y - y_hat).array();
  return Regression{r.square().mean(), r.abs().mean()};
}

ScoreResult score(const Vector& y, const Vector& y_hat, const ScoreConstants& constants) {
  check_lengths(y, y_hat, "score");
  if (!(constants.early > 0.0) || !(constants.late > 0.0)) throw std::invalid_argument("score: constants must be > 0");
  ScoreResult out;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) {
      ++out.skipped;
      continue;
    }
    const double e = 100.0 * (y(i) - y_hat(i)) / y(i);
    out.value += e > 0.0 ? std::expm1(e / constants.late) : std::expm1(-e / constants.early);
  }
  return out;
}

double distance_to_training(const Eigen::RowVectorXd& x, const Matrix& training) {
  if (training.rows() == 0) throw std::invalid_argument("distance_to_training: empty training set");
  if (training.cols() != x.size()) throw std::invalid_argument("distance_to_training: dimension mismatch");
  return (training.rowwise() - x).rowwise().norm().mean();
}

Vector distances_to_training(const Matrix& x, const Matrix& training) {
  Vector d(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) d(i) = distance_to_training(x.row(i), training);
  return d;
}

std::optional<double> dac(const Vector& distances, const Vector& uncertainties) {
  if (distances.size() != uncertainties.size()) throw std::invalid_argument("dac: length mismatch");
  if (distances.size() < 2) throw std::invalid_argument("dac: need at least 2 samples");
  const Eigen::ArrayXd a = distances.array() - distances.mean();
  const Eigen::ArrayXd b = uncertainties.array() - uncertainties.mean();
  const auto n = static_cast<double>(distances.size());
  const double sa = std::sqrt(a.square().sum() / n);
  const double sb = std::sqrt(b.square().sum() / n);
  if (!(sa >= kDegenerateStd) || !(sb >= kDegenerateStd)) return std::nullopt;
  const double r = (a * b).sum() / n / (sa * sb);
  return std::clamp(r, -1.0, 1.0);
}

std::string format_optional(const std::optional<double>& value) {
  if (!value) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", *value);
  return buf;
}

EvalReport evaluate(const Vector& y, const Vector& y_hat, const Vector& sigma, const Vector& distance,
                    const ScoreConstants& constants) {
  const Regression r = regression_metrics(y, y_hat);
  const ScoreResult s = score(y, y_hat, constants);
  EvalReport out;
  out.mse = r.mse;
  out.mae = r.mae;
  out.score = s.value;
  out.score_skipped = s.skipped;
  out.n_samples = static_cast<std::size_t>(y.size());
  out.y = y;
  out.y_hat = y_hat;
  out.sigma = sigma;
  out.distance = distance;
  if (sigma.size() > 0) {
    if (sigma.size() != y.size() || distance.size() != y.size()) {
      throw std::invalid_argument("evaluate: sigma and distance must match y in length");
    }
    if (y.size() >= 2) out.dac = dac(distance, sigma);
  }
  return out;
}

}  // namespace pcuq::metrics
