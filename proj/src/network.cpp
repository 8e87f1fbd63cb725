#include "pcuq/network.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pcuq {

void validate(const LayerSpec& spec) {
  if (spec.in_dim <= 0 || spec.out_dim <= 0) throw std::invalid_argument("LayerSpec: dims must be positive");
  if (spec.residual && spec.in_dim != spec.out_dim) {
    std::ostringstream os;
    os << "LayerSpec: residual connection requires in_dim == out_dim, got " << spec.in_dim << " -> "
       << spec.out_dim;
    throw std::invalid_argument(os.str());
  }
  if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0)) {
    throw std::invalid_argument("LayerSpec: dropout_rate must lie in [0, 1)");
  }
}

namespace {

Vector fixed_start(Index n) {
  std::mt19937_64 rng(0x5eedULL + static_cast<std::uint64_t>(n));
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v / v.norm();
}

// One step v <- W^T W v (normalized); returns |W v| for the new v.
double step(const Matrix& w, Vector& u, Vector& v) {
  Vector wu = w * v;
  const double nu = wu.norm();
  if (nu == 0.0) return 0.0;
  u = wu / nu;
  Vector wtv = w.transpose() * u;
  const double nv = wtv.norm();
  if (nv == 0.0) return 0.0;
  v = wtv / nv;
  return (w * v).norm();
}

}  // namespace

double estimate_spectral_norm(const Matrix& w, int iters, double tol) {
  if (w.size() == 0) throw std::invalid_argument("estimate_spectral_norm: empty matrix");
  if (iters < 1) throw std::invalid_argument("estimate_spectral_norm: iters must be >= 1");
  Vector v = fixed_start(w.cols());
  Vector u(w.rows());
  double prev = -1.0;
  double est = 0.0;
  for (int k = 0; k < iters; ++k) {
    est = step(w, u, v);
    if (est == 0.0) return 0.0;
    if (std::abs(est - prev) < tol * 1e-3) break;
    prev = est;
  }
  return est;
}

double power_iterate(const Matrix& w, SpectralState& state, int iters) {
  if (state.v.size() != w.cols() || state.v.norm() == 0.0) state.v = fixed_start(w.cols());
  if (state.u.size() != w.rows()) state.u = Vector::Zero(w.rows());
  double est = 0.0;
  for (int k = 0; k < iters; ++k) {
    est = step(w, state.u, state.v);
    if (est == 0.0) {
      // Keep the vectors usable for the next call.
      state.v = fixed_start(w.cols());
      break;
    }
  }
  state.last_estimate = est;
  return est;
}

double exact_spectral_norm(const Matrix& w) {
  if (w.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(w);
  return svd.singularValues()(0);
}

void normalize_weights(std::vector<DenseLayer>& layers, double c, int iters) {
  if (!(c > 0.0) || c > 1.0) throw std::invalid_argument("normalize_weights: c must lie in (0, 1]");
  for (auto& layer : layers) {
    layer.spectral.multiplier = c;
    const double lambda = power_iterate(layer.weight, layer.spectral, iters);
    if (lambda > c) {
      layer.weight *= c / lambda;
      layer.spectral.last_estimate = c;
    }
  }
}

Matrix dropout_mask(Index rows, Index cols, double p, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  if (p == 0.0) return Matrix::Ones(rows, cols);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double keep = 1.0 / (1.0 - p);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = uni(rng) < p ? 0.0 : keep;
  }
  return m;
}

Matrix hidden_forward(const std::vector<DenseLayer>& layers, const Matrix& x, std::mt19937_64* rng) {
  if (layers.empty()) return x;
  if (x.cols() != layers.front().spec.in_dim) {
    std::ostringstream os;
    os << "hidden_forward: expected input dim " << layers.front().spec.in_dim << ", got " << x.cols();
    throw std::invalid_argument(os.str());
  }
  if (x.hasNaN()) throw std::invalid_argument("hidden_forward: NaN in input");
  Matrix h = x;
  for (const auto& layer : layers) {
    Matrix z = h * layer.weight;
    z.rowwise() += layer.bias;
    if (layer.spec.activation == Activation::Relu) z = z.cwiseMax(0.0);
    if (layer.spec.residual) z += h;
    if (rng != nullptr && layer.spec.dropout_rate > 0.0) {
      z = z.cwiseProduct(dropout_mask(z.rows(), z.cols(), layer.spec.dropout_rate, *rng));
    }
    h = std::move(z);
  }
  return h;
}

Matrix hidden_forward(const std::vector<DenseLayer>& layers, const Matrix& x, DropoutMode dropout) {
  if (!dropout.enabled()) return hidden_forward(layers, x, static_cast<std::mt19937_64*>(nullptr));
  std::mt19937_64 rng(dropout.seed());
  return hidden_forward(layers, x, &rng);
}

LipschitzStats lipschitz_probe(const std::vector<DenseLayer>& layers,
                               const std::vector<std::pair<RowVector, RowVector>>& pairs) {
  LipschitzStats stats;
  stats.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : pairs) {
    const double dx = (x - y).norm();
    if (dx == 0.0) continue;
    Matrix a = x;
    Matrix b = y;
    for (const auto& layer : layers) {
      const double din = (a - b).norm();
      if (din > 0.0) {
        const double lin = ((a - b) * layer.weight).norm() / din;
        stats.max_layer_ratio = std::max(stats.max_layer_ratio, lin);
      }
      a = hidden_forward(std::vector<DenseLayer>{layer}, a, DropoutMode::off());
      b = hidden_forward(std::vector<DenseLayer>{layer}, b, DropoutMode::off());
    }
    const double r = (a - b).norm() / dx;
    stats.min_ratio = std::min(stats.min_ratio, r);
    stats.max_ratio = std::max(stats.max_ratio, r);
    ++stats.pairs_used;
  }
  if (stats.pairs_used == 0) stats.min_ratio = 0.0;
  return stats;
}

std::vector<LayerSpec> default_layer_specs(Index input_dim, const std::vector<Index>& widths, bool residual,
                                           double dropout_rate) {
  std::vector<LayerSpec> specs;
  Index prev = input_dim;
  for (Index w : widths) {
    LayerSpec s;
    s.in_dim = prev;
    s.out_dim = w;
    s.activation = Activation::Relu;
    s.residual = residual && prev == w;
    s.dropout_rate = dropout_rate;
    validate(s);
    specs.push_back(s);
    prev = w;
  }
  return specs;
}

std::vector<DenseLayer> init_layers(const std::vector<LayerSpec>& specs, double multiplier, std::mt19937_64& rng) {
  std::vector<DenseLayer> layers;
  Index prev = specs.empty() ? 0 : specs.front().in_dim;
  for (const auto& s : specs) {
    validate(s);
    if (s.in_dim != prev) {
      std::ostringstream os;
      os << "init_layers: layer expects input " << s.in_dim << " but previous layer emits " << prev;
      throw std::invalid_argument(os.str());
    }
    DenseLayer layer;
    layer.spec = s;
    const double limit = std::sqrt(6.0 / static_cast<double>(s.in_dim));
    std::uniform_real_distribution<double> uni(-limit, limit);
    layer.weight.resize(s.in_dim, s.out_dim);
    for (Index j = 0; j < s.out_dim; ++j) {
      for (Index i = 0; i < s.in_dim; ++i) layer.weight(i, j) = uni(rng);
    }
    layer.bias = RowVector::Zero(s.out_dim);
    std::normal_distribution<double> normal;
    layer.spectral.v.resize(s.out_dim);
    for (Index i = 0; i < s.out_dim; ++i) layer.spectral.v(i) = normal(rng);
    layer.spectral.v.normalize();
    layer.spectral.u = Vector::Zero(s.in_dim);
    layer.spectral.multiplier = multiplier;
    layers.push_back(std::move(layer));
    prev = s.out_dim;
  }
  return layers;
}

}  // namespace pcuq
