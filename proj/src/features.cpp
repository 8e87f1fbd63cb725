#include "pcuq/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pcuq::features {

double morlet_center_frequency() { return kMorletOmega / (2.0 * std::numbers::pi); }

ScaleGrid scale_grid(double center_frequency, double f_min, double f_max, double sampling_period, int n_scales) {
  if (!(f_min > 0.0) || !(f_min < f_max)) throw std::invalid_argument("scale_grid: need 0 < f_min < f_max");
  if (!(sampling_period > 0.0)) throw std::invalid_argument("scale_grid: sampling period must be > 0");
  if (!(center_frequency > 0.0)) throw std::invalid_argument("scale_grid: center frequency must be > 0");
  if (n_scales < 2) throw std::invalid_argument("scale_grid: need at least 2 scales");
  ScaleGrid g;
  g.center_frequency = center_frequency;
  g.sampling_period = sampling_period;
  const double a_min = center_frequency / (f_max * sampling_period);
  const double a_max = center_frequency / (f_min * sampling_period);
  const double ratio = std::log(a_max / a_min);
  g.scales.resize(static_cast<std::size_t>(n_scales));
  for (int i = 0; i < n_scales; ++i) {
    g.scales[static_cast<std::size_t>(i)] = a_min * std::exp(ratio * i / (n_scales - 1));
  }
  g.scales.front() = a_min;
  g.scales.back() = a_max;
  return g;
}

std::vector<Vector> segment_windows(const Vector& signal, std::size_t window_len, std::size_t stride) {
  if (signal.size() == 0) throw std::invalid_argument("segment_windows: empty signal");
  if (window_len == 0) throw std::invalid_argument("segment_windows: window length must be >= 1");
  if (stride == 0) throw std::invalid_argument("segment_windows: stride must be >= 1");
  const auto n = static_cast<std::size_t>(signal.size());
  if (window_len > n) throw std::invalid_argument("segment_windows: window longer than signal");
  std::vector<Vector> out;
  for (std::size_t start = 0; start + window_len <= n; start += stride) {
    out.emplace_back(signal.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(window_len)));
  }
  return out;
}

std::complex<double> morlet(double t) {
  const double envelope = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * t * t);
  return envelope * std::complex<double>(std::cos(kMorletOmega * t), std::sin(kMorletOmega * t));
}

MorletBank::MorletBank(const ScaleGrid& grid) : grid_(grid) {
  if (grid.scales.empty()) throw std::invalid_argument("MorletBank: empty scale grid");
  for (double a : grid.scales) {
    if (!(a > 0.0)) throw std::invalid_argument("MorletBank: scales must be > 0");
    const int half = static_cast<int>(std::floor(kTruncation * a));
    std::vector<std::complex<double>> k(static_cast<std::size_t>(2 * half + 1));
    const double norm = 1.0 / std::sqrt(a);
    for (int d = -half; d <= half; ++d) k[static_cast<std::size_t>(d + half)] = std::conj(morlet(d / a)) * norm;
    kernels_.push_back(std::move(k));
    half_.push_back(half);
  }
}

ComplexMatrix MorletBank::transform(const Vector& window) const {
  const auto n = static_cast<int>(window.size());
  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(kernels_.size()), n);
  for (std::size_t s = 0; s < kernels_.size(); ++s) {
    const auto& k = kernels_[s];
    const int half = half_[s];
    for (int b = 0; b < n; ++b) {
      const int lo = std::max(-half, -b);
      const int hi = std::min(half, n - 1 - b);
      double re = 0.0;
      double im = 0.0;
      for (int d = lo; d <= hi; ++d) {
        const double x = window(b + d);
        const auto& w = k[static_cast<std::size_t>(d + half)];
        re += x * w.real();
        im += x * w.imag();
      }
      out(static_cast<Eigen::Index>(s), b) = {re, im};
    }
  }
  return out;
}

ComplexMatrix morlet_cwt(const Vector& window, const ScaleGrid& grid) { return MorletBank(grid).transform(window); }

double histogram_entropy(const Vector& values, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram_entropy: bins must be >= 1");
  if (values.size() == 0) return 0.0;
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!(hi > lo)) return 0.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    auto b = static_cast<int>(std::floor((values(i) - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  const auto n = static_cast<double>(values.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

WindowFeatures window_features(const ComplexMatrix& coeffs, const Vector& window, const ScaleGrid& grid) {
  if (static_cast<std::size_t>(coeffs.rows()) != grid.size() || coeffs.cols() != window.size()) {
    throw std::invalid_argument("window_features: coefficient shape does not match window and grid");
  }
  if (window.size() == 0) throw std::invalid_argument("window_features: empty window");
  WindowFeatures f;
  const Vector per_scale = coeffs.cwiseAbs2().rowwise().sum();
  f.log_energy = std::log(std::max(per_scale.sum(), kEnergyFloor));
  Eigen::Index best = 0;
  per_scale.maxCoeff(&best);
  f.dominant_frequency = grid.frequency(static_cast<std::size_t>(best));

  const auto n = static_cast<double>(window.size());
  f.mean = window.mean();
  const Eigen::ArrayXd c = window.array() - f.mean;
  const double m2 = c.square().sum() / n;
  f.std = std::sqrt(m2);
  if (f.std > 0.0) {
    f.skewness = c.cube().sum() / n / (m2 * f.std);
    f.kurtosis = c.square().square().sum() / n / (m2 * m2);
  }
  f.entropy = histogram_entropy(window);
  return f;
}

ScaleGrid FeatureConfig::grid() const {
  if (!(sampling_rate > 0.0)) throw std::invalid_argument("FeatureConfig: sampling rate must be > 0");
  const double top = f_max > 0.0 ? f_max : 0.99 * 0.5 * sampling_rate;
  return scale_grid(morlet_center_frequency(), f_min, top, 1.0 / sampling_rate, n_scales);
}

Matrix extract_dataset(const std::vector<Vector>& horizontal, const std::vector<Vector>& vertical,
                       const std::vector<double>& times, const std::vector<double>& temperatures,
                       const FeatureConfig& config) {
  const std::size_t n = horizontal.size();
  if (vertical.size() != n || times.size() != n || temperatures.size() != n) {
    std::ostringstream os;
    os << "extract_dataset: misaligned inputs (" << n << " horizontal, " << vertical.size() << " vertical, "
       << times.size() << " times, " << temperatures.size() << " temperatures)";
    throw std::invalid_argument(os.str());
  }
  if (n == 0) throw std::invalid_argument("extract_dataset: no windows");
  const MorletBank bank(config.grid());
  Matrix out(static_cast<Eigen::Index>(n), kFeatureColumns);
  const auto [t_lo, t_hi] = std::minmax_element(times.begin(), times.end());
  const double span = *t_hi - *t_lo;
  for (std::size_t i = 0; i < n; ++i) {
    if (horizontal[i].size() != vertical[i].size()) {
      throw std::invalid_argument("extract_dataset: channel windows differ in length at row " + std::to_string(i));
    }
    const auto row = static_cast<Eigen::Index>(i);
    const auto h = window_features(bank.transform(horizontal[i]), horizontal[i], bank.grid()).as_array();
    const auto v = window_features(bank.transform(vertical[i]), vertical[i], bank.grid()).as_array();
    for (int j = 0; j < kFeaturesPerChannel; ++j) {
      out(row, j) = h[static_cast<std::size_t>(j)];
      out(row, kFeaturesPerChannel + j) = v[static_cast<std::size_t>(j)];
    }
    out(row, kTimeColumn) = span > 0.0 ? (times[i] - *t_lo) / span : 0.0;
    out(row, kTemperatureColumn) = temperatures[i];
  }
  return out;
}

Matrix extract_dataset(const Vector& horizontal, const Vector& vertical, const std::vector<double>& times,
                       const std::vector<double>& temperatures, const FeatureConfig& config) {
  if (horizontal.size() != vertical.size()) throw std::invalid_argument("extract_dataset: channel lengths differ");
  return extract_dataset(segment_windows(horizontal, config.window_len, config.stride),
                         segment_windows(vertical, config.window_len, config.stride), times, temperatures, config);
}

Matrix Normalization::apply(const Matrix& raw) const {
  if (raw.cols() != mean.size() || raw.cols() != scale.size()) {
    throw std::invalid_argument("Normalization::apply: column count mismatch");
  }
  Matrix out = raw;
  out.rowwise() -= mean;
  out.array().rowwise() /= scale.array();
  return out;
}

Normalization fit_normalization(const Matrix& raw) {
  if (raw.rows() == 0 || raw.cols() != kFeatureColumns) {
    throw std::invalid_argument("fit_normalization: expected a non-empty N x 16 matrix");
  }
  Normalization n;
  n.mean = raw.colwise().mean();
  n.scale = ((raw.rowwise() - n.mean).array().square().colwise().sum() / static_cast<double>(raw.rows())).sqrt();
  for (Eigen::Index j = 0; j < n.scale.size(); ++j) {
    if (!(n.scale(j) > 1e-12)) n.scale(j) = 1.0;
  }
  n.mean(kTimeColumn) = 0.0;
  n.scale(kTimeColumn) = 1.0;
  return n;
}

std::vector<std::string> feature_names() {
  const char* stats[] = {"log_energy", "dominant_freq", "entropy", "kurtosis", "skewness", "mean", "std"};
  std::vector<std::string> names;
  for (const char* prefix : {"h_", "v_"}) {
    for (const char* s : stats) names.push_back(std::string(prefix) + s);
  }
  names.push_back("t");
  names.push_back("T");
  return names;
}

}  // namespace pcuq::features
