#pragma once

// Time-frequency features from vibration windows: Morlet CWT energy and
// dominant frequency, plus time-domain moments and histogram entropy.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace pcuq::features {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kMorletOmega = 6.0;
/// Center frequency of the Morlet wavelet, omega_0 / (2 pi).
double morlet_center_frequency();
inline constexpr double kEnergyFloor = 1e-12;
inline constexpr int kEntropyBins = 64;
inline constexpr double kTruncation = 5.0;
inline constexpr int kFeaturesPerChannel = 7;
inline constexpr int kFeatureColumns = 2 * kFeaturesPerChannel + 2;

struct ScaleGrid {
  std::vector<double> scales;  // increasing, geometric
  double center_frequency = 0.0;
  double sampling_period = 0.0;

  std::size_t size() const { return scales.size(); }
  double frequency(std::size_t i) const { return center_frequency / (scales[i] * sampling_period); }
};

/// a_min = f_c / (f_max T_s), a_max = f_c / (f_min T_s), geometric in between.
ScaleGrid scale_grid(double center_frequency, double f_min, double f_max, double sampling_period, int n_scales);

std::vector<Vector> segment_windows(const Vector& signal, std::size_t window_len, std::size_t stride);

/// psi(t) = pi^{-1/4} exp(i omega_0 t) exp(-t^2 / 2)
std::complex<double> morlet(double t);

/// Precomputed conjugated, 1/sqrt(a)-scaled kernels, one per scale.
class MorletBank {
 public:
  explicit MorletBank(const ScaleGrid& grid);

  const ScaleGrid& grid() const { return grid_; }
  /// W(a, b) = a^{-1/2} sum_t x[t] conj(psi((t - b) / a)), with |t - b| / a <= 5.
  ComplexMatrix transform(const Vector& window) const;

 private:
  ScaleGrid grid_;
  std::vector<std::vector<std::complex<double>>> kernels_;  // index k -> offset k - half
  std::vector<int> half_;
};

ComplexMatrix morlet_cwt(const Vector& window, const ScaleGrid& grid);

struct WindowFeatures {
  double log_energy = 0.0;
  double dominant_frequency = 0.0;  // Hz
  double entropy = 0.0;             // nats
  double kurtosis = 0.0;            // non-excess
  double skewness = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population

  std::array<double, kFeaturesPerChannel> as_array() const {
    return {log_energy, dominant_frequency, entropy, kurtosis, skewness, mean, std};
  }
};

/// Histogram entropy over the min-max range of the values; 0 for a constant window.
double histogram_entropy(const Vector& values, int bins = kEntropyBins);

WindowFeatures window_features(const ComplexMatrix& coeffs, const Vector& window, const ScaleGrid& grid);

struct FeatureConfig {
  double sampling_rate = 25600.0;  // Hz
  double f_min = 100.0;
  double f_max = 0.0;  // <= 0: 0.99 * Nyquist
  int n_scales = 64;
  std::size_t window_len = 2560;
  std::size_t stride = 2560;

  ScaleGrid grid() const;
};

/// Unnormalized rows [7 horizontal, 7 vertical, t in [0,1] of the record span, T].
/// One window, time and temperature per row.
Matrix extract_dataset(const std::vector<Vector>& horizontal, const std::vector<Vector>& vertical,
                       const std::vector<double>& times, const std::vector<double>& temperatures,
                       const FeatureConfig& config);

/// Continuous signals cut with the configured window/stride first.
Matrix extract_dataset(const Vector& horizontal, const Vector& vertical, const std::vector<double>& times,
                       const std::vector<double>& temperatures, const FeatureConfig& config);

/// Column-wise z-score from training statistics. The time column passes through.
struct Normalization {
  RowVector mean;
  RowVector scale;

  Matrix apply(const Matrix& raw) const;
};

inline constexpr int kTimeColumn = 2 * kFeaturesPerChannel;
inline constexpr int kTemperatureColumn = kTimeColumn + 1;

Normalization fit_normalization(const Matrix& raw);

std::vector<std::string> feature_names();

}  // namespace pcuq::features
