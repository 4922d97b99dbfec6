#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seld/network.hpp"
#include "seld/training.hpp"

namespace seld {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume training or run inference.
struct Checkpoint {
  NetworkConfig network;
  std::string run_config;  ///< JSON echo of the run configuration, may be empty
  std::int64_t iteration = 0;
  ParamStore<float> params;
  std::optional<AdamState> optimizer;
};

/// Binary container: magic, version, config echo, then named float tensors.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file and renames, so a crash never leaves a torn checkpoint.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace seld
