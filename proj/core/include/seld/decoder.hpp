#pragma once

#include <optional>
#include <span>
#include <vector>

#include "seld/embedding.hpp"
#include "seld/pit_loss.hpp"
#include "seld/spatial.hpp"

namespace seld {

struct DecoderConfig {
  double sigma_a = 0.2;  ///< threshold for the most active track
  double sigma_b = 0.8;  ///< threshold for every other track
  bool use_noise_rejection = true;
  bool use_clap_combination = false;

  bool operator==(const DecoderConfig&) const = default;
  void validate() const;
};

/// Class id returned when the noise support is the closest match.
inline constexpr int kNoiseClass = -1;

struct Detection {
  int label_frame = 0;
  int class_id = 0;
  CartesianDOA doa;
  double activity = 0.0;
  int track = 0;
  bool operator==(const Detection&) const = default;
};

/// Tracks passing the dual threshold, in ascending track order.
std::vector<int> gate_tracks(std::span<const AccdoaVector> frame, const DecoderConfig& config);

struct ClassAssignment {
  int class_id = kNoiseClass;
  double similarity = 0.0;
};

/// Nearest support by cosine similarity; the noise support competes when
/// `with_noise` is set and wins only if strictly closer than every class.
ClassAssignment assign_class(std::span<const float> embedding, const SupportSet& support, bool with_noise = true);

/// Detections of one model frame, reported at `label_frame`.
std::vector<Detection> decode_frame(const TrackFramesView<float>& output, int frame, const SupportSet& support,
                                    const DecoderConfig& config, int label_frame);

/// Relabels every frame holding exactly one detection with the class closest
/// to the segment-level embedding. DOA and activity are left untouched.
void apply_clap_override(std::span<std::vector<Detection>> frames, const SupportSet& support,
                         std::span<const float> segment_embedding);

/// decode_frame over the mapped frames of one segment, then the override when
/// enabled. `model_frame_of[i]` is the model frame decoded at label frame
/// `first_label_frame + i`.
std::vector<std::vector<Detection>> decode_with_clap_override(const TrackFramesView<float>& output,
                                                              std::span<const int> model_frame_of,
                                                              int first_label_frame, const SupportSet& support,
                                                              const std::optional<Embedding>& segment_embedding,
                                                              const DecoderConfig& config);

}  // namespace seld
