#pragma once

// INI run configuration. Every key is optional; unknown sections or keys
// are rejected so typos never fall back to defaults silently.

#include "pcuq/features.hpp"
#include "pcuq/physics.hpp"
#include "pcuq/synthetic.hpp"
#include "pcuq/training.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcuq::config {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SweepGrid {
  std::vector<double> gamma = {0.5, 1.0, 2.0};
  std::vector<double> lambda = {0.2, 0.5, 1.0};
  std::vector<double> dropout = {0.1, 0.3, 0.5};
  std::vector<int> ensemble = {10, 20, 30};
};

struct RunConfig {
  training::ModelFamily family = training::ModelFamily::Sngp;
  std::uint64_t seed = 0;
  physics::OperatingPoint operating{4000.0, 1800.0};
  double reference_dt = 0.05;
  physics::PhysicsParams physics;
  training::TrainConfig train;
  features::FeatureConfig features;
  synthetic::SyntheticConfig synthetic;
  SweepGrid sweep;
  std::vector<double> attack_eps = {0.01, 0.5, 1.0};
};

RunConfig defaults();
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

/// Flat "section.key" -> value view of the effective configuration.
std::map<std::string, std::string> echo(const RunConfig& config);

/// Sets one "section.key" entry (same names as the file format).
void apply(RunConfig& config, const std::string& section, const std::string& key, const std::string& value);

std::vector<double> parse_list(const std::string& text);

}  // namespace pcuq::config
