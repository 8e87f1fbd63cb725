#pragma once

#include "pcuq/heads.hpp"
#include "pcuq/network.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace pcuq {

enum class HeadKind { GaussianProcess, Evidential, Dense };

std::string to_string(HeadKind kind);
HeadKind parse_head_kind(const std::string& name);

struct GPHead {
  RFFProjection projection;
  GPPosterior posterior;  // covariance stays at the prior until fitted
  bool posterior_fitted = false;
};

struct DenseHead {
  Vector weight;
  double bias = 0.0;
};

using Head = std::variant<GPHead, NIGHead, DenseHead>;

struct NetworkConfig {
  Index input_dim = 16;
  std::vector<Index> hidden = {32, 32, 64, 64, 32, 32};
  /// When non-empty, used verbatim instead of input_dim / hidden.
  std::vector<LayerSpec> layers;
  bool residual = true;
  double dropout_rate = 0.0;
  HeadKind head = HeadKind::GaussianProcess;
  Index rff_features = 1024;
  double rff_gamma = 1.0;
  double spectral_c = 0.95;
  bool spectral_norm = true;
  double initial_noise_variance = 0.1;
  std::uint64_t seed = 0;
};

struct NetworkModel {
  NetworkConfig config;
  std::vector<DenseLayer> layers;
  Head head;

  HeadKind head_kind() const;
  Index input_dim() const { return layers.empty() ? config.input_dim : layers.front().spec.in_dim; }
  Index feature_dim() const { return layers.empty() ? input_dim() : layers.back().spec.out_dim; }
};

/// Deterministic per seed. Throws std::invalid_argument for incompatible dims.
NetworkModel build_network(const NetworkConfig& config);

/// Batch predictive moments; all variances are zero for the dense head.
struct ModelPrediction {
  Vector mean;
  Vector aleatoric;
  Vector epistemic;
  Vector total;
};

ModelPrediction predict(const NetworkModel& model, const Matrix& x);

/// Predictive mean only; dropout masks come from `rng` when non-null.
Vector predict_mean(const NetworkModel& model, const Matrix& x, std::mt19937_64* rng = nullptr);

/// Predictive mean from penultimate features.
Vector head_mean(const NetworkModel& model, const Matrix& h);

/// Fits Sigma over the rows of `x` (GP head only).
void fit_gp_posterior(NetworkModel& model, const Matrix& x);

}  // namespace pcuq
