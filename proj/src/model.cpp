#include "pcuq/model.hpp"

#include <stdexcept>

namespace pcuq {

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::GaussianProcess: return "gp";
    case HeadKind::Evidential: return "nig";
    case HeadKind::Dense: return "dense";
  }
  return "?";
}

HeadKind parse_head_kind(const std::string& name) {
  if (name == "gp" || name == "sngp") return HeadKind::GaussianProcess;
  if (name == "nig" || name == "sner" || name == "evidential") return HeadKind::Evidential;
  if (name == "dense" || name == "mc" || name == "de") return HeadKind::Dense;
  throw std::invalid_argument("unknown head kind '" + name + "' (expected gp, nig or dense)");
}

HeadKind NetworkModel::head_kind() const {
  switch (head.index()) {
    case 0: return HeadKind::GaussianProcess;
    case 1: return HeadKind::Evidential;
    default: return HeadKind::Dense;
  }
}

NetworkModel build_network(const NetworkConfig& config) {
  NetworkModel model;
  model.config = config;
  std::mt19937_64 rng(config.seed);
  std::vector<LayerSpec> specs = config.layers;
  if (specs.empty()) {
    specs = default_layer_specs(config.input_dim, config.hidden, config.residual, config.dropout_rate);
  }
  model.layers = init_layers(specs, config.spectral_c, rng);
  const Index d = model.feature_dim();

  switch (config.head) {
    case HeadKind::GaussianProcess: {
      GPHead gp;
      gp.projection = make_rff_projection(d, config.rff_features, config.rff_gamma, rng);
      const Index m = config.rff_features;
      std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
      gp.posterior.beta.resize(m);
      for (Index i = 0; i < m; ++i) gp.posterior.beta(i) = normal(rng);
      gp.posterior.covariance = Matrix::Identity(m, m);
      gp.posterior.noise_variance = config.initial_noise_variance;
      model.head = std::move(gp);
      break;
    }
    case HeadKind::Evidential: {
      NIGHead nig;
      const double limit = std::sqrt(6.0 / static_cast<double>(d + 4));
      std::uniform_real_distribution<double> uni(-limit, limit);
      nig.weight.resize(d, 4);
      for (Index j = 0; j < 4; ++j) {
        for (Index i = 0; i < d; ++i) nig.weight(i, j) = uni(rng);
      }
      nig.bias = RowVector::Zero(4);
      model.head = std::move(nig);
      break;
    }
    case HeadKind::Dense: {
      DenseHead dense;
      const double limit = std::sqrt(6.0 / static_cast<double>(d + 1));
      std::uniform_real_distribution<double> uni(-limit, limit);
      dense.weight.resize(d);
      for (Index i = 0; i < d; ++i) dense.weight(i) = uni(rng);
      model.head = std::move(dense);
      break;
    }
  }
  return model;
}

Vector head_mean(const NetworkModel& model, const Matrix& h) {
  return std::visit(
      [&](const auto& head) -> Vector {
        using T = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<T, GPHead>) {
          return random_features(h, head.projection) * head.posterior.beta;
        } else if constexpr (std::is_same_v<T, NIGHead>) {
          return (h * head.weight.col(0)).array() + head.bias(0);
        } else {
          return (h * head.weight).array() + head.bias;
        }
      },
      model.head);
}

Vector predict_mean(const NetworkModel& model, const Matrix& x, std::mt19937_64* rng) {
  return head_mean(model, hidden_forward(model.layers, x, rng));
}

ModelPrediction predict(const NetworkModel& model, const Matrix& x) {
  const Matrix h = hidden_forward(model.layers, x, DropoutMode::off());
  const Index n = h.rows();
  ModelPrediction out;
  std::visit(
      [&](const auto& head) {
        using T = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<T, GPHead>) {
          const auto g = gp_predict(random_features(h, head.projection), head.posterior);
          out.mean = g.mean;
          out.epistemic = g.epistemic;
          out.aleatoric = Vector::Constant(n, head.posterior.noise_variance);
          out.total = g.variance;
        } else if constexpr (std::is_same_v<T, NIGHead>) {
          const auto params = nig_output(h, head);
          out.mean.resize(n);
          out.aleatoric.resize(n);
          out.epistemic.resize(n);
          out.total.resize(n);
          for (Index i = 0; i < n; ++i) {
            const auto m = nig_predictive(params[static_cast<std::size_t>(i)]);
            out.mean(i) = m.mean;
            out.aleatoric(i) = m.aleatoric;
            out.epistemic(i) = m.epistemic;
            out.total(i) = m.total;
          }
        } else {
          out.mean = (h * head.weight).array() + head.bias;
          out.aleatoric = Vector::Zero(n);
          out.epistemic = Vector::Zero(n);
          out.total = Vector::Zero(n);
        }
      },
      model.head);
  return out;
}

void fit_gp_posterior(NetworkModel& model, const Matrix& x) {
  auto* gp = std::get_if<GPHead>(&model.head);
  if (gp == nullptr) throw std::invalid_argument("fit_gp_posterior: model does not have a GP head");
  const Matrix h = hidden_forward(model.layers, x, DropoutMode::off());
  gp->posterior.covariance = posterior_covariance(random_features(h, gp->projection), gp->posterior.noise_variance);
  gp->posterior_fitted = true;
}

}  // namespace pcuq
