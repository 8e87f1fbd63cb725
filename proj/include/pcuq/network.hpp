#pragma once

// Spectral-normalized feed-forward hidden stack.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace pcuq {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class Activation { Relu, Linear };

struct LayerSpec {
  Index in_dim = 0;
  Index out_dim = 0;
  Activation activation = Activation::Relu;
  bool residual = false;
  double dropout_rate = 0.0;
};

/// Throws std::invalid_argument when dims are non-positive, a residual block
/// changes width, or dropout_rate is outside [0, 1).
void validate(const LayerSpec& spec);

/// Persistent power-iteration vectors for one weight matrix (rows x cols):
/// u has `rows` entries, v has `cols`.
struct SpectralState {
  Vector u;
  Vector v;
  double multiplier = 0.95;
  double last_estimate = 0.0;
};

/// y = act(x W + b) for a row of inputs x; residual layers return x + act(x W + b).
/// `weight` is in_dim x out_dim so batches are row-stacked samples.
struct DenseLayer {
  LayerSpec spec;
  Matrix weight;
  RowVector bias;
  SpectralState spectral;
};

/// Largest singular value by power iteration on W^T W from a fixed start.
/// Stops after `iters` iterations or once successive estimates move by less
/// than tol / 1000. All-zero W gives 0.
double estimate_spectral_norm(const Matrix& w, int iters, double tol);

/// Warm-started variant that advances `state` in place and returns the estimate.
double power_iterate(const Matrix& w, SpectralState& state, int iters);

/// Exact largest singular value via SVD; used as the reference oracle.
double exact_spectral_norm(const Matrix& w);

/// Applies W <- c W / lambda when the estimated norm exceeds c. Layers with
/// lambda <= c are left bit-identical. Throws for c <= 0 or c > 1.
void normalize_weights(std::vector<DenseLayer>& layers, double c, int iters);

class DropoutMode {
 public:
  static DropoutMode off() { return DropoutMode(false, 0); }
  static DropoutMode on(std::uint64_t seed) { return DropoutMode(true, seed); }
  bool enabled() const { return enabled_; }
  std::uint64_t seed() const { return seed_; }

 private:
  DropoutMode(bool enabled, std::uint64_t seed) : enabled_(enabled), seed_(seed) {}
  bool enabled_;
  std::uint64_t seed_;
};

/// Inverted-dropout mask (0 or 1/(1-p)) for a rows x cols activation.
Matrix dropout_mask(Index rows, Index cols, double p, std::mt19937_64& rng);

/// Runs the stack on row-stacked inputs. Throws on dim mismatch or NaN input.
Matrix hidden_forward(const std::vector<DenseLayer>& layers, const Matrix& x, DropoutMode dropout);

/// Same, with masks drawn from a caller-owned generator (nullptr = off).
Matrix hidden_forward(const std::vector<DenseLayer>& layers, const Matrix& x, std::mt19937_64* rng);

struct LipschitzStats {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  /// Max over layers and pairs of |(a - a') W| / |a - a'| on each layer's own inputs.
  double max_layer_ratio = 0.0;
  std::size_t pairs_used = 0;
};

/// Distance ratios |h(x) - h(x')| / |x - x'|; identical pairs are skipped.
LipschitzStats lipschitz_probe(const std::vector<DenseLayer>& layers,
                               const std::vector<std::pair<RowVector, RowVector>>& pairs);

/// Hidden specs for input_dim -> widths, residual on consecutive equal widths.
std::vector<LayerSpec> default_layer_specs(Index input_dim, const std::vector<Index>& widths, bool residual,
                                           double dropout_rate);

/// He-uniform weights, zero biases, spectral vectors seeded from `rng`.
std::vector<DenseLayer> init_layers(const std::vector<LayerSpec>& specs, double multiplier, std::mt19937_64& rng);

}  // namespace pcuq
