#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace seld {

/// Planar multichannel audio. All channels share one length.
struct MultichannelWave {
  int sample_rate = 24000;
  std::vector<std::vector<float>> channels;

  MultichannelWave() = default;
  MultichannelWave(int n_channels, std::size_t n_samples, int rate = 24000)
      : sample_rate(rate), channels(static_cast<std::size_t>(n_channels), std::vector<float>(n_samples, 0.0f)) {}

  int num_channels() const noexcept { return static_cast<int>(channels.size()); }
  std::size_t num_samples() const noexcept { return channels.empty() ? 0 : channels.front().size(); }
  std::span<const float> channel(int c) const { return channels.at(static_cast<std::size_t>(c)); }
  std::span<float> channel(int c) { return channels.at(static_cast<std::size_t>(c)); }
};

enum class WavEncoding { pcm16, float32 };

/// Reads RIFF/WAVE with 16-bit PCM or 32-bit IEEE float samples (plain or
/// WAVE_FORMAT_EXTENSIBLE). 16-bit samples are scaled to [-1, 1).
MultichannelWave read_wav(const std::filesystem::path& path);
MultichannelWave parse_wav(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_wav(const MultichannelWave& wave, WavEncoding encoding = WavEncoding::float32);
void write_wav(const std::filesystem::path& path, const MultichannelWave& wave,
               WavEncoding encoding = WavEncoding::float32);

}  // namespace seld
