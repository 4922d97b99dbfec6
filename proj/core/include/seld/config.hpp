#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "seld/decoder.hpp"
#include "seld/features.hpp"
#include "seld/metrics.hpp"
#include "seld/network.hpp"
#include "seld/pit_loss.hpp"
#include "seld/scene.hpp"
#include "seld/training.hpp"

namespace seld {

struct EmbeddingConfig {
  std::string provider = "stub";  ///< "stub" or "table"
  int dim = 512;
  bool orthogonalize = true;
  double audio_noise_level = 0.1;
  std::vector<std::string> class_names{"alarm", "footsteps", "speech", "water"};
  std::string prompt_template = "{}";
  std::string table_path;  ///< embedding table for the "table" provider

  bool operator==(const EmbeddingConfig&) const = default;
};

struct SimulationConfig {
  int n_scenes = 64;
  int n_validation_scenes = 4;
  SceneGenConfig scene;

  bool operator==(const SimulationConfig&) const = default;
};

struct TrainConfig {
  int iterations = 3000;
  int batch_size = 8;
  int val_interval = 500;
  int val_segments = 32;

  bool operator==(const TrainConfig&) const = default;
};

struct SupportConfig {
  std::string mode = "zero";  ///< "zero" or "few"
  int shots = 5;

  bool operator==(const SupportConfig&) const = default;
};

/// Every tunable of a run. Serialised as JSON; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  FeatureConfig features;
  NetworkConfig network;
  LossConfig loss;
  OptimizerConfig optimizer;
  TrainConfig train;
  SimulationConfig simulation;
  EmbeddingConfig embedding;
  SupportConfig support;
  DecoderConfig decoder;
  MetricsConfig metrics;

  bool operator==(const RunConfig&) const = default;

  /// Throws one configuration error listing every violated constraint.
  void validate() const;
};

std::string to_json_text(const RunConfig& config);
RunConfig parse_run_config(std::string_view json_text);
RunConfig read_run_config(const std::filesystem::path& path);

std::string to_json_text(const NetworkConfig& config);
NetworkConfig parse_network_config(std::string_view json_text);

}  // namespace seld
