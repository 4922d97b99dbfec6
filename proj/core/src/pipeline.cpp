#include "seld/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "seld/error.hpp"
#include "seld/random.hpp"

namespace seld {

int SegmentGeometry::padded_frames() const noexcept {
  return (features.seg_frames + time_pooling - 1) / time_pooling * time_pooling;
}

std::int64_t SegmentGeometry::segment_start_sample(int segment) const noexcept {
  return static_cast<std::int64_t>(segment) * features.shift_frames * features.hop;
}

std::int64_t SegmentGeometry::segment_samples() const noexcept {
  return static_cast<std::int64_t>(features.seg_frames - 1) * features.hop + features.frame_len;
}

int SegmentGeometry::feature_frames(std::int64_t num_samples) const noexcept {
  if (num_samples < features.frame_len) return 0;
  return static_cast<int>((num_samples - features.frame_len) / features.hop + 1);
}

int SegmentGeometry::segment_count(std::int64_t num_samples) const {
  return seld::segment_count(std::max(1, feature_frames(num_samples)), features.seg_frames, features.shift_frames);
}

double SegmentGeometry::output_frame_time(int segment, int frame) const noexcept {
  const double feature_frame = static_cast<double>(segment) * features.shift_frames +
                               static_cast<double>(frame) * time_pooling + (time_pooling - 1) / 2.0;
  return (feature_frame * features.hop + features.frame_len / 2.0) / features.sample_rate;
}

int SegmentGeometry::label_frame_of_output(int segment, int frame) const noexcept {
  return static_cast<int>(std::floor(output_frame_time(segment, frame) / label_hop + 1e-9));
}

std::pair<int, int> SegmentGeometry::locate_label_frame(int label_frame, int n_segments) const noexcept {
  const double centre = (label_frame + 0.5) * label_hop;
  const double feature_frame = (centre * features.sample_rate - features.frame_len / 2.0) / features.hop;
  const int segment = std::clamp(static_cast<int>(std::floor(feature_frame / features.shift_frames)), 0,
                                 std::max(0, n_segments - 1));
  const double within = feature_frame - static_cast<double>(segment) * features.shift_frames;
  const int frame = std::clamp(static_cast<int>(std::lround((within - (time_pooling - 1) / 2.0) / time_pooling)),
                               0, output_frames() - 1);
  return {segment, frame};
}

MultichannelWave WaveAudio::render(std::int64_t start, std::int64_t count) const {
  MultichannelWave out;
  out.sample_rate = wave_.sample_rate;
  out.channels.assign(wave_.channels.size(), std::vector<float>(static_cast<std::size_t>(count), 0.0f));
  const auto n = static_cast<std::int64_t>(wave_.num_samples());
  const std::int64_t lo = std::max<std::int64_t>(start, 0), hi = std::min(start + count, n);
  for (std::size_t c = 0; c < wave_.channels.size(); ++c) {
    for (std::int64_t i = lo; i < hi; ++i) {
      out.channels[c][static_cast<std::size_t>(i - start)] = wave_.channels[c][static_cast<std::size_t>(i)];
    }
  }
  return out;
}

namespace {

FeatureTensor segment_features(const AudioSource& audio, const SegmentGeometry& g, int segment) {
  const auto wave = audio.render(g.segment_start_sample(segment), g.segment_samples());
  return pad_frames(extract_features(wave, g.features), g.padded_frames());
}

}  // namespace

TrainingExample make_example(const AudioSource& audio, const OracleTargets& targets, const SegmentGeometry& geometry,
                             int segment) {
  TrainingExample ex;
  ex.features = segment_features(audio, geometry, segment);
  ex.n_frames = geometry.output_frames();
  const int n = targets.n_tracks, d = targets.embed_dim;
  ex.embed.assign(static_cast<std::size_t>(ex.n_frames) * n * d, 0.0f);
  ex.accdoa.assign(static_cast<std::size_t>(ex.n_frames) * n * 3, 0.0f);
  for (int j = 0; j < ex.n_frames; ++j) {
    const int l = geometry.label_frame_of_output(segment, j);
    if (l < 0 || l >= targets.n_frames) continue;
    const auto src_e = std::span(targets.embeddings).subspan(static_cast<std::size_t>(l) * n * d,
                                                             static_cast<std::size_t>(n) * d);
    std::copy(src_e.begin(), src_e.end(), ex.embed.begin() + static_cast<std::ptrdiff_t>(j) * n * d);
    const auto src_a = std::span(targets.accdoa).subspan(static_cast<std::size_t>(l) * n * 3,
                                                         static_cast<std::size_t>(n) * 3);
    std::copy(src_a.begin(), src_a.end(), ex.accdoa.begin() + static_cast<std::ptrdiff_t>(j) * n * 3);
  }
  return ex;
}

BatchSampler::BatchSampler(std::span<const TrainingScene> scenes, SegmentGeometry geometry, std::uint64_t seed)
    : scenes_(scenes), geometry_(std::move(geometry)), seed_(derive_seed(seed, "batch-order")) {
  for (std::size_t s = 0; s < scenes_.size(); ++s) {
    const int count = geometry_.segment_count(scenes_[s].audio->num_samples());
    for (int k = 0; k < count; ++k) items_.emplace_back(static_cast<int>(s), k);
  }
  if (items_.empty()) fail(ErrorKind::empty_input, "no training segments");
}

std::vector<TrainingExample> BatchSampler::next(int batch_size) {
  std::vector<TrainingExample> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) {
    const double u = counter_uniform(seed_, drawn_++);
    const auto idx = std::min(items_.size() - 1, static_cast<std::size_t>(u * static_cast<double>(items_.size())));
    const auto [s, k] = items_[idx];
    const auto& scene = scenes_[static_cast<std::size_t>(s)];
    batch.push_back(make_example(*scene.audio, scene.targets, geometry_, k));
  }
  return batch;
}

std::vector<TrainingExample> BatchSampler::fixed(int count) const {
  std::vector<TrainingExample> out;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(count, 0)), items_.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto [s, k] = items_[i * items_.size() / n];
    const auto& scene = scenes_[static_cast<std::size_t>(s)];
    out.push_back(make_example(*scene.audio, scene.targets, geometry_, k));
  }
  return out;
}

SceneOutputs predict(const EmbedAccdoaNet<float>& net, const AudioSource& audio, const SegmentGeometry& geometry,
                     int n_label_frames) {
  SceneOutputs out;
  out.geometry = geometry;
  out.n_label_frames = n_label_frames;
  const int count = geometry.segment_count(audio.num_samples());
  out.segments.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.segments.push_back(net.forward(segment_features(audio, geometry, k)));
  return out;
}

std::vector<std::vector<Detection>> decode_scene(const SceneOutputs& outputs, const SupportSet& support,
                                                 const DecoderConfig& config,
                                                 std::span<const Embedding> segment_embeddings) {
  const int n_segments = static_cast<int>(outputs.segments.size());
  if (config.use_clap_combination && static_cast<int>(segment_embeddings.size()) != n_segments) {
    fail(ErrorKind::configuration, "CLAP combination needs one embedding per segment (" +
                                       std::to_string(n_segments) + "), got " +
                                       std::to_string(segment_embeddings.size()));
  }
  std::vector<std::vector<Detection>> frames;
  frames.reserve(static_cast<std::size_t>(outputs.n_label_frames));
  int l = 0;
  while (l < outputs.n_label_frames) {
    const int k = outputs.geometry.locate_label_frame(l, n_segments).first;
    const int first = l;
    std::vector<int> model_frames;
    for (; l < outputs.n_label_frames; ++l) {
      const auto [seg, frame] = outputs.geometry.locate_label_frame(l, n_segments);
      if (seg != k) break;
      model_frames.push_back(frame);
    }
    std::optional<Embedding> clap;
    if (config.use_clap_combination) clap = segment_embeddings[static_cast<std::size_t>(k)];
    auto decoded = decode_with_clap_override(outputs.segments[static_cast<std::size_t>(k)].view(), model_frames,
                                             first, support, clap, config);
    for (auto& f : decoded) frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<AudioClip> segment_clips(const Scene& scene, const SourceBank& bank, const SegmentGeometry& geometry) {
  const int count = geometry.segment_count(scene.num_samples());
  std::vector<AudioClip> clips;
  clips.reserve(static_cast<std::size_t>(count));
  const double rate = scene.sample_rate;
  for (int k = 0; k < count; ++k) {
    const auto start = geometry.segment_start_sample(k);
    const auto len = geometry.segment_samples();
    const double t0 = static_cast<double>(start) / rate, t1 = static_cast<double>(start + len) / rate;
    std::map<int, double> cover;
    for (const auto& e : scene.annotation.events) {
      const double overlap = std::min(t1, e.offset) - std::max(t0, e.onset);
      if (overlap > 0) cover[e.class_id] += overlap;
    }
    int cls = kBackgroundClass;
    double best = 0.0;
    for (const auto& [c, v] : cover) {
      if (v > best) best = v, cls = c;
    }
    AudioClip clip;
    clip.tag = SynthTag{cls, derive_seed(scene.noise_seed, "segment", static_cast<std::uint64_t>(k))};
    clip.key = segment_key(k);
    auto wave = scene.render(start, len, bank);
    clip.samples = std::move(wave.channels.front());
    clips.push_back(std::move(clip));
  }
  return clips;
}

SceneAnnotation annotation_from_records(std::span<const AnnotationRecord> records, int n_label_frames) {
  struct Span {
    int class_id = 0, first = 0, last = 0;
    double az = 0, el = 0;
  };
  std::map<int, Span> by_source;
  for (const auto& r : records) {
    auto [it, fresh] = by_source.try_emplace(r.source_id, Span{r.class_id, r.frame, r.frame, r.azimuth, r.elevation});
    auto& s = it->second;
    if (!fresh && s.class_id != r.class_id) {
      fail(ErrorKind::invalid_input, "source " + std::to_string(r.source_id) + " changes class at frame " +
                                         std::to_string(r.frame));
    }
    if (r.frame < s.first) s.first = r.frame, s.az = r.azimuth, s.el = r.elevation;
    s.last = std::max(s.last, r.frame);
  }
  SceneAnnotation a;
  for (const auto& [source, s] : by_source) {
    EventSpec e;
    e.class_id = s.class_id;
    e.onset = s.first * a.label_hop;
    e.offset = (s.last + 1) * a.label_hop;
    e.direction = {s.az, s.el};
    e.key = event_key(source);
    a.events.push_back(std::move(e));
  }
  int frames = n_label_frames;
  for (const auto& r : records) frames = std::max(frames, r.frame + 1);
  rebuild_frame_labels(a, frames);
  return a;
}

}  // namespace seld
