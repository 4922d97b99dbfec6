#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "seld/embedding.hpp"
#include "seld/spatial.hpp"
#include "seld/wav.hpp"

namespace seld {

/// Seeded band-limited noise for one class; `variation_seed` selects the read offset.
struct SynthSource {
  std::uint64_t variation_seed = 0;
};

/// A static point source in the scene.
struct EventSpec {
  int class_id = 0;
  double onset = 0.0;   ///< seconds
  double offset = 0.0;  ///< seconds, exclusive
  SphericalDirection direction;
  std::variant<SynthSource, std::vector<float>> source = SynthSource{};
  double gain = 1.0;
  /// Embedding lookup key; synthetic events use synth_key().
  std::string key;
};

struct FrameLabel {
  int class_id = 0;
  int event_index = 0;
  double azimuth = 0.0;
  double elevation = 0.0;
  bool operator==(const FrameLabel&) const = default;
};

inline constexpr double kLabelHop = 0.1;

struct SceneAnnotation {
  std::vector<EventSpec> events;
  double label_hop = kLabelHop;
  /// frame_labels[l] lists the events overlapping [l·hop, (l+1)·hop).
  std::vector<std::vector<FrameLabel>> frame_labels;

  int num_frames() const noexcept { return static_cast<int>(frame_labels.size()); }
  int max_polyphony() const noexcept;
};

/// First and one-past-last label frame touched by [onset, offset).
std::pair<int, int> label_frame_range(double onset, double offset, double hop = kLabelHop) noexcept;
int label_frame_count(double seconds, double hop = kLabelHop) noexcept;

/// Rebuilds frame_labels from events over n_frames label frames.
void rebuild_frame_labels(SceneAnnotation& annotation, int n_frames);

/// Frequency band of a synthetic class, in Hz.
struct Band {
  double low = 0.0;
  double high = 0.0;
};

/// Geometrically spaced, non-overlapping bands between 400 Hz and 10 kHz.
std::vector<Band> default_class_bands(int n_classes);

/// Periodic band-limited noise buffers, one per class, unit RMS.
class SourceBank {
 public:
  SourceBank(int sample_rate, std::vector<Band> bands, std::uint64_t seed, int length_log2 = 17);

  int sample_rate() const noexcept { return rate_; }
  int num_classes() const noexcept { return static_cast<int>(buffers_.size()); }
  const Band& band(int class_id) const;
  /// Sample i of a synthetic event: periodic read plus 10 ms raised-cosine fades.
  float sample(int class_id, std::uint64_t variation_seed, std::int64_t i, std::int64_t length) const;

 private:
  int rate_;
  std::vector<Band> bands_;
  std::vector<std::vector<float>> buffers_;
};

/// Mono source waveform (before gain) of an event, length = event duration in samples.
std::vector<float> render_source(const EventSpec& event, int sample_rate, const SourceBank* bank);

/// Start sample and length of an event.
std::pair<std::int64_t, std::int64_t> event_span(const EventSpec& event, int sample_rate) noexcept;

/// Four-channel direct-path FOA image of one event in a scene of `scene_len` seconds.
MultichannelWave spatialize(const EventSpec& event, double scene_len, const SourceBank& bank);

/// A mixture defined by its events and noise; audio is rendered on demand so
/// long scenes never need to be held in memory.
struct Scene {
  SceneAnnotation annotation;
  double length_seconds = 0.0;
  int sample_rate = 24000;
  double noise_level = 0.0;
  std::uint64_t noise_seed = 0;

  std::int64_t num_samples() const noexcept;
  /// Samples [start, start + count) of the mixture; out-of-range samples are zero.
  MultichannelWave render(std::int64_t start, std::int64_t count, const SourceBank& bank) const;
  MultichannelWave render_all(const SourceBank& bank) const { return render(0, num_samples(), bank); }
};

struct MixOptions {
  double scene_len = 60.0;
  int sample_rate = 24000;
  int max_polyphony = 3;
};

/// Σ spatialize(event) + diffuse Gaussian noise of `noise_level` RMS per channel.
/// Throws generation when the frame-level polyphony exceeds the cap.
std::pair<MultichannelWave, SceneAnnotation> mix_scene(std::span<const EventSpec> events, double noise_level,
                                                       std::uint64_t seed, const MixOptions& options,
                                                       const SourceBank& bank);

/// Validates events and polyphony and builds the lazy scene.
Scene make_scene(std::vector<EventSpec> events, double noise_level, std::uint64_t seed, const MixOptions& options);

/// Per-label-frame, per-track targets. Layout (frame, track, component).
struct OracleTargets {
  int n_tracks = 0;
  int embed_dim = 0;
  int n_frames = 0;
  std::vector<float> embeddings;  ///< n_frames × n_tracks × embed_dim
  std::vector<float> accdoa;      ///< n_frames × n_tracks × 3
  std::vector<int> event_track;   ///< track held by each annotation event
  std::vector<Embedding> event_embeddings;

  std::span<const float> embedding(int t, int n) const {
    return std::span(embeddings).subspan((static_cast<std::size_t>(t) * n_tracks + n) * embed_dim, embed_dim);
  }
  std::span<const float> accdoa_at(int t, int n) const {
    return std::span(accdoa).subspan((static_cast<std::size_t>(t) * n_tracks + n) * 3, 3);
  }
  bool active(int t, int n) const;
};

/// Each event holds the lowest track free at its first label frame for its
/// whole duration; its embedding is the provider's audio embedding of the clean
/// event (first channel). Unused tracks stay zero. Throws capacity when more
/// than n_tracks events share a frame.
OracleTargets oracle_targets(const SceneAnnotation& annotation, const EmbeddingProvider& provider, int n_tracks,
                             const SourceBank* bank = nullptr, int sample_rate = 24000);

/// Applies a discrete FOA rotation/reflection to audio and labels alike.
std::pair<MultichannelWave, SceneAnnotation> rotate_foa(const MultichannelWave& wave,
                                                        const SceneAnnotation& annotation, int rotation_id);

struct SceneGenConfig {
  double scene_seconds = 60.0;
  int sample_rate = 24000;
  int n_classes = 4;
  int max_polyphony = 2;
  double min_event = 1.0;
  double max_event = 4.0;
  double min_gap = 0.5;
  double max_gap = 3.0;
  double min_gain = 0.7;
  double max_gain = 1.0;
  double min_elevation = -45.0;
  double max_elevation = 45.0;
  double noise_level = 0.02;
  /// Overlapping events never share a class.
  bool distinct_overlap_classes = true;

  bool operator==(const SceneGenConfig&) const = default;
};

/// Random scene with one event layer per polyphony slot; onsets and durations
/// fall on the label-frame grid.
Scene generate_scene(const SceneGenConfig& config, std::uint64_t scene_seed);

}  // namespace seld
