#include "pcuq/synthetic.hpp"

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pcuq::synthetic {

void SyntheticConfig::validate() const {
  if (train_bearings < 1) throw std::invalid_argument("synthetic: need at least one training bearing");
  if (test_bearings < 0 || ood_bearings < 0) throw std::invalid_argument("synthetic: bearing counts must be >= 0");
  if (samples_per_bearing < 2) throw std::invalid_argument("synthetic: samples_per_bearing must be >= 2");
  if (!(dt > 0.0)) throw std::invalid_argument("synthetic: dt must be > 0");
  if (!(noise >= 0.0)) throw std::invalid_argument("synthetic: noise must be >= 0");
  auto check = [](const physics::OperatingPoint& op) {
    if (!(op.load > 0.0) || !(op.rpm > 0.0)) throw std::invalid_argument("synthetic: load and rpm must be > 0");
  };
  check(in_domain);
  for (const auto& op : out_of_domain) check(op);
}

namespace {

// Typical spread of each trend over a life; noise is relative to these.
constexpr std::array<double, features::kFeaturesPerChannel> kSpread = {3.0, 1500.0, 0.6, 5.0, 0.4, 0.02, 1.0};

}  // namespace

std::array<double, features::kFeaturesPerChannel> feature_trend(double d, const physics::OperatingPoint& op,
                                                                bool vertical) {
  const double lf = op.load / 4000.0;
  const double sf = op.rpm / 1800.0;
  const double k = vertical ? 0.8 : 1.0;
  return {
      1.0 + 2.0 * std::log(lf * sf) + 3.0 * k * d,  // log energy
      (2000.0 + 1500.0 * k * d) * sf,               // dominant frequency
      3.2 + 0.6 * k * d + 0.3 * (lf - 1.0),         // entropy
      3.0 + 5.0 * k * d * d,                        // kurtosis
      0.4 * k * d * d * lf,                         // skewness
      0.02 * k * d,                                 // mean
      0.5 * lf * sf * (1.0 + 2.0 * k * d),          // std
  };
}

training::Dataset SyntheticDataset::subset(int which) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) rows.push_back(static_cast<Eigen::Index>(i));
  }
  training::Dataset d;
  d.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  d.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.x.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    d.y(static_cast<Eigen::Index>(i)) = y(rows[i]);
  }
  return d;
}

SyntheticDataset synthesize_dataset(const SyntheticConfig& config, const physics::PhysicsParams& params,
                                    std::uint64_t seed) {
  config.validate();
  params.validate();
  struct Job {
    physics::OperatingPoint op;
    int split;
  };
  std::vector<Job> jobs;
  for (int i = 0; i < config.train_bearings; ++i) jobs.push_back({config.in_domain, Train});
  for (int i = 0; i < config.test_bearings; ++i) jobs.push_back({config.in_domain, Test});
  for (const auto& op : config.out_of_domain) {
    for (int i = 0; i < config.ood_bearings; ++i) jobs.push_back({op, OutOfDomain});
  }

  const int s = config.samples_per_bearing;
  const auto total = static_cast<Eigen::Index>(jobs.size()) * s;
  SyntheticDataset out;
  out.raw.resize(total, features::kFeatureColumns);
  out.y.resize(total);
  std::mt19937_64 noise_rng(seed ^ 0x5bd1e995ULL);
  std::normal_distribution<double> normal;

  Eigen::Index row = 0;
  for (std::size_t b = 0; b < jobs.size(); ++b) {
    physics::SimulationOptions opts;
    opts.stop_damage = 1.0;
    const auto traj = physics::simulate_trajectory(params, physics::Schedule::constant(jobs[b].op.load, jobs[b].op.rpm),
                                                   1e6, config.dt, seed + 7919ULL * (b + 1), opts);
    const double life = traj.states.back().t;
    std::vector<double> times(static_cast<std::size_t>(s));
    for (int k = 0; k < s; ++k) times[static_cast<std::size_t>(k)] = life * k / (s - 1);
    const std::vector<double> labels = config.labels == physics::LabelMode::Physics
                                           ? physics::physics_labels_at(traj, times)
                                           : physics::linear_labels(static_cast<std::size_t>(s));
    for (int k = 0; k < s; ++k, ++row) {
      const double d = labels[static_cast<std::size_t>(k)];
      for (int ch = 0; ch < 2; ++ch) {
        const auto trend = feature_trend(d, jobs[b].op, ch == 1);
        for (int j = 0; j < features::kFeaturesPerChannel; ++j) {
          double v = trend[static_cast<std::size_t>(j)];
          if (config.noise > 0.0) v += config.noise * kSpread[static_cast<std::size_t>(j)] * normal(noise_rng);
          out.raw(row, ch * features::kFeaturesPerChannel + j) = v;
        }
      }
      out.raw(row, features::kTimeColumn) = static_cast<double>(k) / (s - 1);
      out.raw(row, features::kTemperatureColumn) = traj.state_at(times[static_cast<std::size_t>(k)]).temperature;
      out.y(row) = d;
      out.split.push_back(jobs[b].split);
      out.bearing.push_back(static_cast<int>(b));
    }
  }

  Eigen::MatrixXd train(config.train_bearings * s, features::kFeatureColumns);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < total; ++i) {
    if (out.split[static_cast<std::size_t>(i)] == Train) train.row(r++) = out.raw.row(i);
  }
  out.normalization = features::fit_normalization(train);
  out.x = out.normalization.apply(out.raw);
  out.reference = training::PhysicsReference::simulate(params, config.in_domain.load, config.in_domain.rpm, config.dt);
  return out;
}

}  // namespace pcuq::synthetic
