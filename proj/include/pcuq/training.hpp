#pragma once

// Physics-constrained training: data loss from the head's own criterion,
// a residual on d(mean)/dt at collocation points, softmax-of-std loss
// weights, Adam, and spectral re-normalization. Also the dropout and
// ensemble baselines and the FGSM perturbation.

#include "pcuq/diffcore.hpp"
#include "pcuq/model.hpp"
#include "pcuq/physics.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace pcuq::training {

struct LossBreakdown {
  double data = 0.0;
  double phys = 0.0;
  double w1 = 1.0;
  double w2 = 0.0;
  double total = 0.0;
};

struct Weights {
  double data = 0.5;
  double phys = 0.5;
};

/// w_data = e^{sigma_x} / (e^{sigma_phys} + e^{sigma_x}); the pair sums to exactly 1.
Weights dynamic_weights(double sigma_phys, double sigma_x);

/// Population standard deviation (0 for fewer than 2 values).
double population_std(const Vector& v);

/// Target rate of the normalized label with respect to normalized time,
/// tabulated from a reference trajectory: D'(t) * t_span / (D_end - D_0).
class PhysicsReference {
 public:
  PhysicsReference() = default;

  static PhysicsReference from_trajectory(const physics::Trajectory& trajectory,
                                          const physics::PhysicsParams& params);
  /// Deterministic run at a constant operating point until D_coupled reaches `stop_damage`.
  static PhysicsReference simulate(const physics::PhysicsParams& params, double load, double rpm, double dt,
                                   double stop_damage = 1.0, double t_max = 1e6);
  static PhysicsReference constant(double rate);

  /// Throws std::out_of_range outside [0, 1] (with 1e-9 slack).
  double rate(double t_norm) const;
  Vector rates(const Vector& t_norm) const;

  bool empty() const { return t_.empty(); }
  double time_span() const { return span_; }
  double damage_scale() const { return scale_; }
  const std::vector<double>& grid() const { return t_; }
  const std::vector<double>& values() const { return r_; }

 private:
  std::vector<double> t_;
  std::vector<double> r_;
  double span_ = 1.0;
  double scale_ = 1.0;
};

enum class PhysicsCriterion { HeadLoss, SquaredError };
enum class Collocation { Random, Grid };

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads);
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  AdamConfig adam;
  std::uint64_t seed = 0;
  NetworkConfig network;
  double evidential_lambda = 0.2;
  bool physics = true;
  int collocation_points = 0;  // 0: batch size
  Collocation collocation = Collocation::Random;
  PhysicsCriterion physics_criterion = PhysicsCriterion::HeadLoss;
  int spectral_iters = 1;
  int spectral_final_iters = 1000;
  int ensemble_size = 10;
  int mc_samples = 100;

  void validate() const;
};

struct Dataset {
  Matrix x;  // N x 16, normalized
  Vector y;  // N, in [0, 1]
};

/// Flat parameter list: per hidden layer (W, b) then the head
/// (gp: beta, log noise variance; nig: W, b; dense: w, b).
std::vector<Matrix> get_parameters(const NetworkModel& model);
void set_parameters(NetworkModel& model, const std::vector<Matrix>& params);

struct LossOptions {
  bool data = true;
  bool physics = true;
  bool dropout = false;
  PhysicsCriterion physics_criterion = PhysicsCriterion::HeadLoss;
  double evidential_lambda = 0.2;
};

struct LossBatch {
  Matrix x;
  Vector y;
  std::vector<Matrix> masks;  // one per dropout layer, N x width
  Matrix x_phys;
  Vector target;
  std::vector<Matrix> phys_masks;
  Weights weights;
};

/// Autodiff graph of the training objective for one model structure.
/// Built once; parameters and batch tensors are rebound per step.
class LossGraph {
 public:
  LossGraph(const NetworkModel& model, LossOptions options);
  LossGraph(const LossGraph&) = delete;
  LossGraph& operator=(const LossGraph&) = delete;

  void load_parameters(const std::vector<Matrix>& params);
  LossBreakdown forward(const LossBatch& batch);

  enum class Target { Data, Physics, Total };
  std::vector<Matrix> parameter_gradients(Target target = Target::Total);
  /// d L_data / d x, after forward().
  Matrix input_gradient();

  const std::vector<std::size_t>& dropout_layers() const { return dropout_layers_; }
  const LossOptions& options() const { return options_; }

 private:
  ad::Var hidden(const ad::Var& x, const std::vector<ad::Var>& masks);

  LossOptions options_;
  std::unique_ptr<ad::Graph> graph_;
  std::vector<ad::Var> params_;
  std::vector<std::size_t> dropout_layers_;
  std::vector<ad::Var> layer_weights_;
  std::vector<ad::Var> layer_biases_;
  std::vector<Activation> activations_;
  std::vector<char> residual_;
  ad::Var x_, y_, x_phys_, direction_, target_, w1_, w2_;
  std::vector<ad::Var> masks_, phys_masks_;
  ad::Var data_, phys_, total_;
};

/// L_phys at normalized times (and normalized temperatures) against the
/// reference rate. Dropout off.
double physics_residual(const NetworkModel& model, const Vector& t_norm, const Vector& temperature,
                        const PhysicsReference& reference, const LossOptions& options = {});

/// 16-column physics inputs: zero feature slots, then (t, T).
Matrix physics_inputs(const Vector& t_norm, const Vector& temperature);

class Trainer {
 public:
  Trainer(NetworkModel& model, const TrainConfig& config, const PhysicsReference* reference,
          const Dataset* training_set = nullptr);

  /// One optimizer step on the given rows; collocation points are drawn internally.
  LossBreakdown step(const Matrix& x, const Vector& y);
  /// One optimizer step with explicit physics inputs.
  LossBreakdown step(const Matrix& x, const Vector& y, const Matrix& x_phys, const Vector& target);

  /// Collocation inputs and targets for the next step.
  std::pair<Matrix, Vector> collocation(int count);

  /// Final normalization and, for the GP head, the posterior fit on `x_train`.
  void finalize(const Matrix& x_train);

  LossGraph& graph() { return *graph_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  LossBatch make_batch(const Matrix& x, const Vector& y, const Matrix& x_phys, const Vector& target);

  NetworkModel& model_;
  TrainConfig config_;
  const PhysicsReference* reference_;
  std::unique_ptr<LossGraph> graph_;
  Adam adam_;
  std::mt19937_64 rng_;
  std::vector<std::pair<double, double>> time_temperature_;  // sorted (t, T) pairs of the training rows
};

struct TrainResult {
  NetworkModel model;
  std::vector<LossBreakdown> history;  // per-epoch means
  std::vector<LossBreakdown> steps;
};

/// Deterministic per config.seed. For the GP head the posterior is fitted after the last epoch.
TrainResult train(const Dataset& data, const TrainConfig& config, const PhysicsReference* reference);

struct UncertainPrediction {
  Vector mean;
  Vector variance;
};

/// Sample mean and population variance over n_samples dropout forwards with rate p_d on every hidden layer.
UncertainPrediction mc_dropout_predict(const NetworkModel& model, const Matrix& x, double p_d, int n_samples,
                                       std::uint64_t seed);

/// Member mean and population variance of the members' predictive means.
UncertainPrediction ensemble_predict(const std::vector<NetworkModel>& models, const Matrix& x);

enum class ModelFamily { Sngp, Sner, McDropout, DeepEnsemble };

std::string to_string(ModelFamily family);
ModelFamily parse_family(const std::string& name);
HeadKind head_for(ModelFamily family);

/// Trained predictor of any family. Ensembles carry several members.
struct Predictor {
  ModelFamily family = ModelFamily::Sngp;
  std::vector<NetworkModel> members;
  double mc_rate = 0.1;
  int mc_samples = 100;
  std::uint64_t mc_seed = 0;
};

/// For sngp/sner the total predictive variance; for the baselines the sample variance.
UncertainPrediction predict(const Predictor& predictor, const Matrix& x);

/// Trains a predictor of the given family (ensembles train ensemble_size members on derived seeds).
Predictor train_predictor(ModelFamily family, const Dataset& data, const TrainConfig& config,
                          const PhysicsReference* reference, std::vector<LossBreakdown>* history = nullptr);

/// x + eps * sign(d L_data / d x) with the head's data criterion, dropout off.
Matrix fgsm_perturb(const NetworkModel& model, const Matrix& x, const Vector& y, double eps,
                    double evidential_lambda = 0.2);

/// Data loss of the head's criterion (dropout off); used for attack reports.
double data_loss(const NetworkModel& model, const Matrix& x, const Vector& y, double evidential_lambda = 0.2);

}  // namespace pcuq::training
