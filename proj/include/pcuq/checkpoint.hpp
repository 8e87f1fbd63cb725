#pragma once

// Versioned text checkpoints: whitespace-separated tokens, matrices as
// "rows cols v..." with shortest round-trip doubles, closed by an end marker.

#include "pcuq/features.hpp"
#include "pcuq/training.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace pcuq::io {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  training::Predictor predictor;
  std::optional<features::Normalization> normalization;
  std::map<std::string, std::string> config;  // values must not contain whitespace
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pcuq::io
