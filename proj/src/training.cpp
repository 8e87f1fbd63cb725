#include "pcuq/training.hpp"

#include "pcuq/features.hpp"
#include "pcuq/heads.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pcuq::training {

Weights dynamic_weights(double sigma_phys, double sigma_x) {
  if (!std::isfinite(sigma_phys) || !std::isfinite(sigma_x)) {
    throw std::invalid_argument("dynamic_weights: non-finite standard deviation");
  }
  if (sigma_phys < 0.0 || sigma_x < 0.0) throw std::invalid_argument("dynamic_weights: negative standard deviation");
  // The smaller weight is computed directly so its complement is exact enough
  // to make the pair sum to 1 after the nudge below.
  const double diff = sigma_phys - sigma_x;
  const double small = 1.0 / (1.0 + std::exp(std::abs(diff)));
  double large = 1.0 - small;
  for (int i = 0; i < 4 && small + large != 1.0; ++i) {
    large = std::nextafter(large, small + large < 1.0 ? 2.0 : 0.0);
  }
  return diff > 0.0 ? Weights{small, large} : Weights{large, small};
}

double population_std(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().mean());
}

// ---- physics reference -----------------------------------------------------

PhysicsReference PhysicsReference::from_trajectory(const physics::Trajectory& trajectory,
                                                   const physics::PhysicsParams& params) {
  if (trajectory.size() < 2) throw std::invalid_argument("PhysicsReference: trajectory needs >= 2 samples");
  const auto& s = trajectory.states;
  PhysicsReference ref;
  ref.span_ = s.back().t - s.front().t;
  ref.scale_ = s.back().damage - s.front().damage;
  if (!(ref.span_ > 0.0)) throw std::invalid_argument("PhysicsReference: trajectory has zero duration");
  if (!(ref.scale_ != 0.0)) throw std::invalid_argument("PhysicsReference: terminal D_coupled equals the initial value");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& op = trajectory.operating[i];
    ref.t_.push_back((s[i].t - s.front().t) / ref.span_);
    ref.r_.push_back(physics::coupled_rate(s[i], op.load, op.rpm, params) * ref.span_ / ref.scale_);
  }
  ref.t_.back() = 1.0;
  return ref;
}

PhysicsReference PhysicsReference::simulate(const physics::PhysicsParams& params, double load, double rpm, double dt,
                                            double stop_damage, double t_max) {
  physics::SimulationOptions opts;
  opts.stochastic = false;
  opts.stop_damage = stop_damage;
  const auto traj = physics::simulate_trajectory(params, physics::Schedule::constant(load, rpm), t_max, dt, 0, opts);
  return from_trajectory(traj, params);
}

PhysicsReference PhysicsReference::constant(double rate) {
  PhysicsReference ref;
  ref.t_ = {0.0, 1.0};
  ref.r_ = {rate, rate};
  return ref;
}

double PhysicsReference::rate(double t_norm) const {
  if (t_.empty()) throw std::out_of_range("PhysicsReference: no reference trajectory");
  if (!(t_norm >= -1e-9 && t_norm <= 1.0 + 1e-9)) {
    std::ostringstream os;
    os << "PhysicsReference: normalized time " << t_norm << " outside the reference trajectory";
    throw std::out_of_range(os.str());
  }
  if (t_norm <= t_.front()) return r_.front();
  if (t_norm >= t_.back()) return r_.back();
  const auto it = std::upper_bound(t_.begin(), t_.end(), t_norm);
  const auto i = static_cast<std::size_t>(it - t_.begin());
  const double w = (t_norm - t_[i - 1]) / (t_[i] - t_[i - 1]);
  return r_[i - 1] + w * (r_[i] - r_[i - 1]);
}

Vector PhysicsReference::rates(const Vector& t_norm) const {
  Vector out(t_norm.size());
  for (Index i = 0; i < t_norm.size(); ++i) out(i) = rate(t_norm(i));
  return out;
}

// ---- optimizer ---------------------------------------------------------------

void Adam::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("Adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.rows(), p.cols()));
      v_.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseAbs2();
    params[i].array() -= config_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(adam.learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be >= 0");
  if (collocation_points < 0) throw std::invalid_argument("TrainConfig: collocation_points must be >= 0");
  if (spectral_iters < 1 || spectral_final_iters < 1) throw std::invalid_argument("TrainConfig: spectral iterations must be >= 1");
  if (ensemble_size < 1) throw std::invalid_argument("TrainConfig: ensemble_size must be >= 1");
  if (mc_samples < 1) throw std::invalid_argument("TrainConfig: mc_samples must be >= 1");
  if (!(evidential_lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
}

// ---- parameters ----------------------------------------------------------------

std::vector<Matrix> get_parameters(const NetworkModel& model) {
  std::vector<Matrix> out;
  for (const auto& l : model.layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  std::visit(
      [&](const auto& head) {
        using T = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<T, GPHead>) {
          out.push_back(head.posterior.beta);
          out.push_back(Matrix::Constant(1, 1, std::log(head.posterior.noise_variance)));
        } else if constexpr (std::is_same_v<T, NIGHead>) {
          out.push_back(head.weight);
          out.push_back(head.bias);
        } else {
          out.push_back(head.weight);
          out.push_back(Matrix::Constant(1, 1, head.bias));
        }
      },
      model.head);
  return out;
}

void set_parameters(NetworkModel& model, const std::vector<Matrix>& params) {
  if (params.size() != 2 * model.layers.size() + 2) throw std::invalid_argument("set_parameters: wrong parameter count");
  auto check = [](const Matrix& p, Index r, Index c) {
    if (p.rows() != r || p.cols() != c) throw std::invalid_argument("set_parameters: parameter shape mismatch");
  };
  std::size_t k = 0;
  for (auto& l : model.layers) {
    check(params[k], l.weight.rows(), l.weight.cols());
    l.weight = params[k++];
    check(params[k], 1, l.bias.size());
    l.bias = params[k++];
  }
  std::visit(
      [&](auto& head) {
        using T = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<T, GPHead>) {
          check(params[k], head.posterior.beta.size(), 1);
          head.posterior.beta = params[k++];
          check(params[k], 1, 1);
          head.posterior.noise_variance = std::exp(params[k](0, 0));
        } else if constexpr (std::is_same_v<T, NIGHead>) {
          check(params[k], head.weight.rows(), 4);
          head.weight = params[k++];
          check(params[k], 1, 4);
          head.bias = params[k];
        } else {
          check(params[k], head.weight.size(), 1);
          head.weight = params[k++];
          check(params[k], 1, 1);
          head.bias = params[k](0, 0);
        }
      },
      model.head);
}

// ---- loss graph ------------------------------------------------------------------

namespace {

ad::Var constant(ad::Graph& g, const Matrix& m) { return ad::Var(g, g.constant(m)); }

Matrix selector(Index j) {
  Matrix e = Matrix::Zero(4, 1);
  e(j, 0) = 1.0;
  return e;
}

}  // namespace

ad::Var LossGraph::hidden(const ad::Var& x, const std::vector<ad::Var>& masks) {
  ad::Var h = x;
  std::size_t m = 0;
  for (std::size_t i = 0; i < layer_weights_.size(); ++i) {
    ad::Var z = ad::matmul(h, layer_weights_[i]) + layer_biases_[i];
    if (activations_[i] == Activation::Relu) z = ad::relu(z);
    if (residual_[i]) z = z + h;
    if (m < dropout_layers_.size() && dropout_layers_[m] == i) {
      if (!masks.empty()) z = z * masks[m];
      ++m;
    }
    h = z;
  }
  return h;
}

LossGraph::LossGraph(const NetworkModel& model, LossOptions options)
    : options_(options), graph_(std::make_unique<ad::Graph>()) {
  if (!options_.data && !options_.physics) throw std::invalid_argument("LossGraph: nothing to compute");
  ad::Graph& g = *graph_;
  const Index in = model.input_dim();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    const std::string tag = std::to_string(i);
    layer_weights_.emplace_back(g, g.parameter("W" + tag, l.weight.rows(), l.weight.cols()));
    layer_biases_.emplace_back(g, g.parameter("b" + tag, 1, l.bias.size()));
    params_.push_back(layer_weights_.back());
    params_.push_back(layer_biases_.back());
    activations_.push_back(l.spec.activation);
    residual_.push_back(l.spec.residual ? 1 : 0);
    if (options_.dropout && l.spec.dropout_rate > 0.0) dropout_layers_.push_back(i);
  }
  for (std::size_t m = 0; m < dropout_layers_.size(); ++m) {
    const Index w = model.layers[dropout_layers_[m]].spec.out_dim;
    masks_.emplace_back(g, g.input("mask" + std::to_string(m), Eigen::Dynamic, w));
    phys_masks_.emplace_back(g, g.input("phys_mask" + std::to_string(m), Eigen::Dynamic, w));
  }

  const HeadKind kind = model.head_kind();
  const Index d = model.feature_dim();
  struct HeadVars {
    ad::Var a, b;
  } head;
  ad::Var freq, phase;
  if (kind == HeadKind::GaussianProcess) {
    const auto& gp = std::get<GPHead>(model.head);
    head.a = ad::Var(g, g.parameter("beta", gp.posterior.beta.size(), 1));
    head.b = ad::Var(g, g.parameter("log_noise", 1, 1));
    freq = constant(g, gp.projection.frequencies());
    phase = constant(g, gp.projection.phase);
  } else if (kind == HeadKind::Evidential) {
    head.a = ad::Var(g, g.parameter("nig_W", d, 4));
    head.b = ad::Var(g, g.parameter("nig_b", 1, 4));
  } else {
    head.a = ad::Var(g, g.parameter("dense_w", d, 1));
    head.b = ad::Var(g, g.parameter("dense_b", 1, 1));
  }
  params_.push_back(head.a);
  params_.push_back(head.b);

  const Index m_features = kind == HeadKind::GaussianProcess ? std::get<GPHead>(model.head).projection.feature_count() : 0;
  auto gp_mean = [&](const ad::Var& h) {
    const ad::Var phi = std::sqrt(2.0 / static_cast<double>(m_features)) * ad::cos(ad::matmul(h, freq) + phase);
    return ad::matmul(phi, head.a);
  };
  auto nig_raw = [&](const ad::Var& h) { return ad::matmul(h, head.a) + head.b; };
  auto column = [&](const ad::Var& raw, Index j) { return ad::matmul(raw, constant(g, selector(j))); };
  auto nig_vars = [&](const ad::Var& raw) {
    return graph::nig_activation(column(raw, 0), column(raw, 1), column(raw, 2), column(raw, 3));
  };

  ad::Var total;
  if (options_.data) {
    x_ = ad::Var(g, g.input("x", Eigen::Dynamic, in));
    y_ = ad::Var(g, g.input("y", Eigen::Dynamic, 1));
    const ad::Var h = hidden(x_, masks_);
    if (kind == HeadKind::GaussianProcess) {
      data_ = ad::mean(graph::gaussian_nll(y_, gp_mean(h), ad::exp(head.b)));
    } else if (kind == HeadKind::Evidential) {
      data_ = ad::mean(graph::evidential_loss(y_, nig_vars(nig_raw(h)), options_.evidential_lambda).total);
    } else {
      data_ = ad::mean(ad::square(y_ - (ad::matmul(h, head.a) + head.b)));
    }
  }
  if (options_.physics) {
    x_phys_ = ad::Var(g, g.input("x_phys", Eigen::Dynamic, in));
    direction_ = ad::Var(g, g.input("direction", Eigen::Dynamic, in));
    target_ = ad::Var(g, g.input("target", Eigen::Dynamic, 1));
    const ad::Var h = hidden(x_phys_, phys_masks_);
    const bool squared = options_.physics_criterion == PhysicsCriterion::SquaredError || kind == HeadKind::Dense;
    if (kind == HeadKind::Evidential) {
      const ad::Var raw = nig_raw(h);
      graph::NIGVars p = nig_vars(raw);
      p.gamma = ad::directional_derivative(column(raw, 0), x_phys_, direction_);
      if (squared) {
        phys_ = ad::mean(ad::square(p.gamma - target_));
      } else {
        phys_ = ad::mean(graph::evidential_loss(target_, p, options_.evidential_lambda).total);
      }
    } else {
      const ad::Var mean = kind == HeadKind::GaussianProcess ? gp_mean(h) : ad::matmul(h, head.a) + head.b;
      const ad::Var rate = ad::directional_derivative(mean, x_phys_, direction_);
      const ad::Var r2 = ad::square(rate - target_);
      if (squared) {
        phys_ = ad::mean(r2);
      } else {
        // Gaussian NLL with the variance slot fixed at 1.
        phys_ = ad::mean(0.5 * (r2 + std::log(2.0 * std::numbers::pi)));
      }
    }
  }
  w1_ = ad::Var(g, g.input("w1", 1, 1));
  w2_ = ad::Var(g, g.input("w2", 1, 1));
  if (options_.data && options_.physics) {
    total_ = w1_ * data_ + w2_ * phys_;
  } else if (options_.data) {
    total_ = w1_ * data_;
  } else {
    total_ = w2_ * phys_;
  }
  load_parameters(get_parameters(model));
}

void LossGraph::load_parameters(const std::vector<Matrix>& params) {
  if (params.size() != params_.size()) throw std::invalid_argument("LossGraph: wrong parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) graph_->bind(params_[i].id(), params[i]);
}

LossBreakdown LossGraph::forward(const LossBatch& batch) {
  ad::Graph& g = *graph_;
  if (options_.data) {
    if (batch.x.rows() == 0 || batch.x.rows() != batch.y.size()) {
      throw std::invalid_argument("LossGraph: data batch is empty or misaligned");
    }
    g.bind(x_.id(), batch.x);
    g.bind(y_.id(), Matrix(batch.y));
  }
  if (options_.physics) {
    if (batch.x_phys.rows() == 0 || batch.x_phys.rows() != batch.target.size()) {
      throw std::invalid_argument("LossGraph: physics batch is empty or misaligned");
    }
    g.bind(x_phys_.id(), batch.x_phys);
    Matrix dir = Matrix::Zero(batch.x_phys.rows(), batch.x_phys.cols());
    dir.col(features::kTimeColumn).setOnes();
    g.bind(direction_.id(), dir);
    g.bind(target_.id(), Matrix(batch.target));
  }
  for (std::size_t m = 0; m < dropout_layers_.size(); ++m) {
    if (options_.data) {
      if (m >= batch.masks.size()) throw std::invalid_argument("LossGraph: missing dropout mask");
      g.bind(masks_[m].id(), batch.masks[m]);
    }
    if (options_.physics) {
      if (m >= batch.phys_masks.size()) throw std::invalid_argument("LossGraph: missing physics dropout mask");
      g.bind(phys_masks_[m].id(), batch.phys_masks[m]);
    }
  }
  g.bind(w1_.id(), Matrix::Constant(1, 1, batch.weights.data));
  g.bind(w2_.id(), Matrix::Constant(1, 1, batch.weights.phys));

  LossBreakdown out;
  out.w1 = batch.weights.data;
  out.w2 = batch.weights.phys;
  out.data = options_.data ? data_.value()(0, 0) : 0.0;
  out.phys = options_.physics ? phys_.value()(0, 0) : 0.0;
  out.total = total_.value()(0, 0);
  if (!std::isfinite(out.total)) {
    std::ostringstream os;
    os << "training loss is not finite (L_data=" << out.data << ", L_phys=" << out.phys << ")";
    throw std::runtime_error(os.str());
  }
  return out;
}

std::vector<Matrix> LossGraph::parameter_gradients(Target target) {
  ad::Var node = total_;
  if (target == Target::Data) {
    if (!options_.data) throw std::invalid_argument("LossGraph: data loss not built");
    node = data_;
  } else if (target == Target::Physics) {
    if (!options_.physics) throw std::invalid_argument("LossGraph: physics loss not built");
    node = phys_;
  }
  const ad::GradientMap grads = graph_->gradient(node.id());
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(grads.at(p.id()));
  return out;
}

Matrix LossGraph::input_gradient() {
  if (!options_.data) throw std::invalid_argument("LossGraph: data loss not built");
  return graph_->gradient(data_.id()).at(x_.id());
}

Matrix physics_inputs(const Vector& t_norm, const Vector& temperature) {
  if (t_norm.size() != temperature.size()) throw std::invalid_argument("physics_inputs: t and T lengths differ");
  Matrix x = Matrix::Zero(t_norm.size(), features::kFeatureColumns);
  x.col(features::kTimeColumn) = t_norm;
  x.col(features::kTimeColumn + 1) = temperature;
  return x;
}

double physics_residual(const NetworkModel& model, const Vector& t_norm, const Vector& temperature,
                        const PhysicsReference& reference, const LossOptions& options) {
  if (model.input_dim() != features::kFeatureColumns) {
    throw std::invalid_argument("physics_residual: model input dim must be 16");
  }
  LossOptions o = options;
  o.data = false;
  o.physics = true;
  o.dropout = false;
  LossGraph g(model, o);
  LossBatch b;
  b.x_phys = physics_inputs(t_norm, temperature);
  b.target = reference.rates(t_norm);
  b.weights = {0.0, 1.0};
  return g.forward(b).phys;
}

// ---- trainer ---------------------------------------------------------------------

Trainer::Trainer(NetworkModel& model, const TrainConfig& config, const PhysicsReference* reference,
                 const Dataset* training_set)
    : model_(model), config_(config), reference_(reference), adam_(config.adam), rng_(config.seed ^ 0x9e3779b97f4a7c15ULL) {
  config_.validate();
  if (config_.physics && (reference_ == nullptr || reference_->empty())) {
    throw std::invalid_argument("Trainer: physics loss enabled without a reference trajectory");
  }
  LossOptions o;
  o.physics = config_.physics;
  o.dropout = true;
  o.physics_criterion = config_.physics_criterion;
  o.evidential_lambda = config_.evidential_lambda;
  graph_ = std::make_unique<LossGraph>(model_, o);
  if (training_set != nullptr && training_set->x.cols() > features::kTimeColumn + 1) {
    for (Index i = 0; i < training_set->x.rows(); ++i) {
      time_temperature_.emplace_back(training_set->x(i, features::kTimeColumn),
                                     training_set->x(i, features::kTimeColumn + 1));
    }
    std::sort(time_temperature_.begin(), time_temperature_.end());
  }
}

std::pair<Matrix, Vector> Trainer::collocation(int count) {
  Vector t(count);
  if (config_.collocation == Collocation::Grid) {
    for (int i = 0; i < count; ++i) t(i) = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
  } else {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < count; ++i) t(i) = uni(rng_);
  }
  Vector temp = Vector::Zero(count);
  if (!time_temperature_.empty()) {
    for (int i = 0; i < count; ++i) {
      auto it = std::lower_bound(time_temperature_.begin(), time_temperature_.end(), std::make_pair(t(i), -1e300));
      if (it == time_temperature_.end()) --it;
      if (it != time_temperature_.begin()) {
        auto prev = it - 1;
        if (std::abs(prev->first - t(i)) < std::abs(it->first - t(i))) it = prev;
      }
      temp(i) = it->second;
    }
  }
  return {physics_inputs(t, temp), reference_->rates(t)};
}

LossBatch Trainer::make_batch(const Matrix& x, const Vector& y, const Matrix& x_phys, const Vector& target) {
  LossBatch b;
  b.x = x;
  b.y = y;
  b.x_phys = x_phys;
  b.target = target;
  for (std::size_t idx : graph_->dropout_layers()) {
    const auto& spec = model_.layers[idx].spec;
    b.masks.push_back(dropout_mask(x.rows(), spec.out_dim, spec.dropout_rate, rng_));
    if (config_.physics) b.phys_masks.push_back(dropout_mask(x_phys.rows(), spec.out_dim, spec.dropout_rate, rng_));
  }
  if (config_.physics) {
    b.weights = dynamic_weights(population_std(target), population_std(y));
  } else {
    b.weights = {1.0, 0.0};
  }
  return b;
}

LossBreakdown Trainer::step(const Matrix& x, const Vector& y) {
  if (!config_.physics) return step(x, y, Matrix(), Vector());
  const int count = config_.collocation_points > 0 ? config_.collocation_points : static_cast<int>(x.rows());
  auto [xp, target] = collocation(count);
  return step(x, y, xp, target);
}

LossBreakdown Trainer::step(const Matrix& x, const Vector& y, const Matrix& x_phys, const Vector& target) {
  const LossBatch batch = make_batch(x, y, x_phys, target);
  std::vector<Matrix> params = get_parameters(model_);
  graph_->load_parameters(params);
  const LossBreakdown out = graph_->forward(batch);
  if (config_.adam.learning_rate == 0.0) return out;
  const std::vector<Matrix> grads = graph_->parameter_gradients();
  for (const auto& gm : grads) {
    if (!gm.allFinite()) throw std::runtime_error("training gradient is not finite");
  }
  adam_.step(params, grads);
  set_parameters(model_, params);
  if (config_.network.spectral_norm) normalize_weights(model_.layers, config_.network.spectral_c, config_.spectral_iters);
  return out;
}

void Trainer::finalize(const Matrix& x_train) {
  if (config_.network.spectral_norm) {
    normalize_weights(model_.layers, config_.network.spectral_c, config_.spectral_final_iters);
  }
  if (model_.head_kind() == HeadKind::GaussianProcess && x_train.rows() > 0) fit_gp_posterior(model_, x_train);
}

TrainResult train(const Dataset& data, const TrainConfig& config, const PhysicsReference* reference) {
  config.validate();
  if (data.x.rows() != data.y.size()) throw std::invalid_argument("train: features and labels differ in length");
  if (data.x.rows() == 0) throw std::invalid_argument("train: empty dataset");
  NetworkConfig net = config.network;
  net.seed = config.seed;
  if (net.input_dim != data.x.cols() && net.layers.empty()) net.input_dim = data.x.cols();
  TrainResult result{build_network(net), {}, {}};
  if (config.epochs == 0) return result;

  Trainer trainer(result.model, config, reference, &data);
  const Index n = data.x.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), trainer.rng());
    LossBreakdown acc{0.0, 0.0, 0.0, 0.0, 0.0};
    int steps = 0;
    for (Index start = 0; start < n; start += config.batch_size) {
      const Index len = std::min<Index>(config.batch_size, n - start);
      Matrix xb(len, data.x.cols());
      Vector yb(len);
      for (Index i = 0; i < len; ++i) {
        const Index r = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = data.x.row(r);
        yb(i) = data.y(r);
      }
      const LossBreakdown s = trainer.step(xb, yb);
      result.steps.push_back(s);
      acc.data += s.data;
      acc.phys += s.phys;
      acc.w1 += s.w1;
      acc.w2 += s.w2;
      acc.total += s.total;
      ++steps;
    }
    const double k = static_cast<double>(steps);
    result.history.push_back({acc.data / k, acc.phys / k, acc.w1 / k, acc.w2 / k, acc.total / k});
  }
  trainer.finalize(data.x);
  return result;
}

// ---- baselines -------------------------------------------------------------------

UncertainPrediction mc_dropout_predict(const NetworkModel& model, const Matrix& x, double p_d, int n_samples,
                                       std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("mc_dropout_predict: n_samples must be >= 1");
  if (!(p_d >= 0.0) || p_d >= 1.0) throw std::invalid_argument("mc_dropout_predict: p_d must lie in [0, 1)");
  std::vector<DenseLayer> layers = model.layers;
  for (auto& l : layers) l.spec.dropout_rate = p_d;
  std::mt19937_64 rng(seed);
  Vector sum = Vector::Zero(x.rows());
  Vector sq = Vector::Zero(x.rows());
  for (int s = 0; s < n_samples; ++s) {
    const Vector m = head_mean(model, hidden_forward(layers, x, p_d > 0.0 ? &rng : nullptr));
    sum += m;
    sq += m.cwiseAbs2();
  }
  UncertainPrediction out;
  out.mean = sum / n_samples;
  if (n_samples == 1 || p_d == 0.0) {
    out.variance = Vector::Zero(x.rows());
  } else {
    out.variance = (sq / n_samples - out.mean.cwiseAbs2()).cwiseMax(0.0);
  }
  return out;
}

UncertainPrediction ensemble_predict(const std::vector<NetworkModel>& models, const Matrix& x) {
  if (models.empty()) throw std::invalid_argument("ensemble_predict: no members");
  for (const auto& m : models) {
    if (m.input_dim() != models.front().input_dim()) throw std::invalid_argument("ensemble_predict: members differ in input dim");
  }
  std::vector<Vector> means;
  for (const auto& m : models) means.push_back(predict_mean(m, x));
  UncertainPrediction out;
  // Moments about the first member, so identical members give exactly zero variance.
  const double n = static_cast<double>(means.size());
  Vector shift = Vector::Zero(x.rows()), shift2 = Vector::Zero(x.rows());
  for (const auto& m : means) {
    shift += m - means.front();
    shift2 += (m - means.front()).cwiseAbs2();
  }
  out.mean = means.front() + shift / n;
  out.variance = (shift2 / n - (shift / n).cwiseAbs2()).cwiseMax(0.0);
  return out;
}

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::Sngp: return "sngp";
    case ModelFamily::Sner: return "sner";
    case ModelFamily::McDropout: return "mc";
    case ModelFamily::DeepEnsemble: return "de";
  }
  return "?";
}

ModelFamily parse_family(const std::string& name) {
  if (name == "sngp" || name == "gp") return ModelFamily::Sngp;
  if (name == "sner" || name == "nig") return ModelFamily::Sner;
  if (name == "mc" || name == "mc_dropout") return ModelFamily::McDropout;
  if (name == "de" || name == "ensemble") return ModelFamily::DeepEnsemble;
  throw std::invalid_argument("unknown model family '" + name + "' (expected sngp, sner, mc or de)");
}

HeadKind head_for(ModelFamily family) {
  switch (family) {
    case ModelFamily::Sngp: return HeadKind::GaussianProcess;
    case ModelFamily::Sner: return HeadKind::Evidential;
    default: return HeadKind::Dense;
  }
}

UncertainPrediction predict(const Predictor& predictor, const Matrix& x) {
  if (predictor.members.empty()) throw std::invalid_argument("predict: predictor has no members");
  switch (predictor.family) {
    case ModelFamily::Sngp:
    case ModelFamily::Sner: {
      const ModelPrediction p = pcuq::predict(predictor.members.front(), x);
      return {p.mean, p.total};
    }
    case ModelFamily::McDropout:
      return mc_dropout_predict(predictor.members.front(), x, predictor.mc_rate, predictor.mc_samples,
                                predictor.mc_seed);
    case ModelFamily::DeepEnsemble:
      return ensemble_predict(predictor.members, x);
  }
  throw std::logic_error("predict: unhandled family");
}

Predictor train_predictor(ModelFamily family, const Dataset& data, const TrainConfig& config,
                          const PhysicsReference* reference, std::vector<LossBreakdown>* history) {
  TrainConfig c = config;
  c.network.head = head_for(family);
  Predictor p;
  p.family = family;
  p.mc_samples = config.mc_samples;
  p.mc_seed = config.seed;
  if (family == ModelFamily::McDropout) {
    if (!(c.network.dropout_rate > 0.0)) throw std::invalid_argument("train_predictor: MC dropout needs dropout_rate > 0");
    p.mc_rate = c.network.dropout_rate;
  } else if (family != ModelFamily::DeepEnsemble) {
    c.network.dropout_rate = 0.0;
  }
  const int members = family == ModelFamily::DeepEnsemble ? config.ensemble_size : 1;
  for (int i = 0; i < members; ++i) {
    c.seed = config.seed + 1000003ULL * static_cast<std::uint64_t>(i);
    TrainResult r = train(data, c, reference);
    if (history != nullptr && i == 0) *history = r.history;
    p.members.push_back(std::move(r.model));
  }
  return p;
}

double data_loss(const NetworkModel& model, const Matrix& x, const Vector& y, double evidential_lambda) {
  LossOptions o;
  o.physics = false;
  o.evidential_lambda = evidential_lambda;
  LossGraph g(model, o);
  LossBatch b;
  b.x = x;
  b.y = y;
  b.weights = {1.0, 0.0};
  return g.forward(b).data;
}

Matrix fgsm_perturb(const NetworkModel& model, const Matrix& x, const Vector& y, double eps, double evidential_lambda) {
  if (!(eps >= 0.0)) throw std::invalid_argument("fgsm_perturb: eps must be >= 0");
  if (eps == 0.0) return x;
  LossOptions o;
  o.physics = false;
  o.evidential_lambda = evidential_lambda;
  LossGraph g(model, o);
  LossBatch b;
  b.x = x;
  b.y = y;
  b.weights = {1.0, 0.0};
  g.forward(b);
  const Matrix grad = g.input_gradient();
  const Matrix sign = grad.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
  return x + eps * sign;
}

}  // namespace pcuq::training
