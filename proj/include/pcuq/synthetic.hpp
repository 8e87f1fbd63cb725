#pragma once

// Desk-scale stand-in for run-to-failure datasets: each bearing is a
// physics trajectory, and its feature rows are monotone trends of the
// degradation label plus seeded noise and operating-condition offsets.

#include "pcuq/features.hpp"
#include "pcuq/physics.hpp"
#include "pcuq/training.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace pcuq::synthetic {

enum Split : int { Train = 0, Test = 1, OutOfDomain = 2 };

struct SyntheticConfig {
  int train_bearings = 4;
  int test_bearings = 2;
  int ood_bearings = 1;  // per out-of-domain condition
  int samples_per_bearing = 100;
  double dt = 0.05;  // s
  double noise = 0.05;
  physics::OperatingPoint in_domain{4000.0, 1800.0};
  std::vector<physics::OperatingPoint> out_of_domain{{4200.0, 1650.0}, {5000.0, 1500.0}};
  physics::LabelMode labels = physics::LabelMode::Physics;

  void validate() const;
};

struct SyntheticDataset {
  Eigen::MatrixXd raw;  // unnormalized feature rows
  Eigen::MatrixXd x;    // normalized with training-split statistics
  Eigen::VectorXd y;
  std::vector<int> split;
  std::vector<int> bearing;
  features::Normalization normalization;
  training::PhysicsReference reference;  // in-domain condition, deterministic

  training::Dataset subset(int which) const;
};

/// Noise-free feature vector of one channel at label value `d`.
std::array<double, features::kFeaturesPerChannel> feature_trend(double d, const physics::OperatingPoint& op,
                                                                bool vertical);

SyntheticDataset synthesize_dataset(const SyntheticConfig& config, const physics::PhysicsParams& params,
                                    std::uint64_t seed);

}  // namespace pcuq::synthetic
