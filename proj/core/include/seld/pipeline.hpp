#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "seld/annotation.hpp"
#include "seld/decoder.hpp"
#include "seld/features.hpp"
#include "seld/network.hpp"
#include "seld/scene.hpp"
#include "seld/training.hpp"

namespace seld {

/// Time bookkeeping between samples, feature frames, model frames and label frames.
struct SegmentGeometry {
  FeatureConfig features;
  int time_pooling = 8;
  double label_hop = kLabelHop;

  int padded_frames() const noexcept;
  int output_frames() const noexcept { return padded_frames() / time_pooling; }
  std::int64_t segment_start_sample(int segment) const noexcept;
  /// Samples needed to produce seg_frames feature frames.
  std::int64_t segment_samples() const noexcept;
  int feature_frames(std::int64_t num_samples) const noexcept;
  int segment_count(std::int64_t num_samples) const;
  /// Centre time in seconds of model frame `frame` of `segment`.
  double output_frame_time(int segment, int frame) const noexcept;
  int label_frame_of_output(int segment, int frame) const noexcept;
  /// Segment and model frame decoded for a label frame: the segment whose
  /// shift window holds the label frame centre, then the nearest model frame.
  std::pair<int, int> locate_label_frame(int label_frame, int n_segments) const noexcept;
};

/// Audio that can be rendered in windows.
class AudioSource {
 public:
  virtual ~AudioSource() = default;
  virtual int sample_rate() const = 0;
  virtual std::int64_t num_samples() const = 0;
  virtual MultichannelWave render(std::int64_t start, std::int64_t count) const = 0;
};

class SceneAudio final : public AudioSource {
 public:
  SceneAudio(const Scene& scene, const SourceBank& bank) : scene_(scene), bank_(bank) {}
  int sample_rate() const override { return scene_.sample_rate; }
  std::int64_t num_samples() const override { return scene_.num_samples(); }
  MultichannelWave render(std::int64_t start, std::int64_t count) const override {
    return scene_.render(start, count, bank_);
  }

 private:
  const Scene& scene_;
  const SourceBank& bank_;
};

class WaveAudio final : public AudioSource {
 public:
  explicit WaveAudio(MultichannelWave wave) : wave_(std::move(wave)) {}
  int sample_rate() const override { return wave_.sample_rate; }
  std::int64_t num_samples() const override { return static_cast<std::int64_t>(wave_.num_samples()); }
  MultichannelWave render(std::int64_t start, std::int64_t count) const override;

 private:
  MultichannelWave wave_;
};

/// One training item: audio plus per-label-frame oracle targets.
struct TrainingScene {
  std::shared_ptr<const AudioSource> audio;
  OracleTargets targets;
};

/// Features of one segment (padded to a multiple of the pooling) and its
/// targets resampled to model frames by nearest label frame.
TrainingExample make_example(const AudioSource& audio, const OracleTargets& targets, const SegmentGeometry& geometry,
                             int segment);

/// Draws batches of (scene, segment) uniformly with a seeded stream.
class BatchSampler {
 public:
  BatchSampler(std::span<const TrainingScene> scenes, SegmentGeometry geometry, std::uint64_t seed);
  std::vector<TrainingExample> next(int batch_size);
  /// Deterministic evenly spread selection for validation.
  std::vector<TrainingExample> fixed(int count) const;
  /// Number of examples drawn so far; restoring it resumes the same sequence.
  std::uint64_t position() const noexcept { return drawn_; }
  void set_position(std::uint64_t drawn) noexcept { drawn_ = drawn; }
  std::size_t size() const noexcept { return items_.size(); }

 private:
  std::span<const TrainingScene> scenes_;
  SegmentGeometry geometry_;
  std::vector<std::pair<int, int>> items_;
  std::uint64_t seed_;
  std::uint64_t drawn_ = 0;
};

/// Network outputs for every segment of a recording.
struct SceneOutputs {
  SegmentGeometry geometry;
  int n_label_frames = 0;
  std::vector<TrackFrameOutput<float>> segments;
};

SceneOutputs predict(const EmbedAccdoaNet<float>& net, const AudioSource& audio, const SegmentGeometry& geometry,
                     int n_label_frames);

/// Detections per label frame. `segment_embeddings` holds one embedding per
/// segment and is required when the CLAP combination is enabled.
std::vector<std::vector<Detection>> decode_scene(const SceneOutputs& outputs, const SupportSet& support,
                                                 const DecoderConfig& config,
                                                 std::span<const Embedding> segment_embeddings = {});

/// Segment-level clip of the first channel for every segment. Synthetic
/// scenes tag each clip with the class covering most of the segment.
std::vector<AudioClip> segment_clips(const Scene& scene, const SourceBank& bank, const SegmentGeometry& geometry);

inline std::string segment_key(int segment) { return "segment:" + std::to_string(segment); }
inline std::string event_key(int source_id) { return "event:" + std::to_string(source_id); }

/// Rebuilds static events (one per source id) from reference rows so oracle
/// targets can be derived from files. Event keys are event_key(source).
SceneAnnotation annotation_from_records(std::span<const AnnotationRecord> records, int n_label_frames);

}  // namespace seld
