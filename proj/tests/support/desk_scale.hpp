#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <vector>

#include "seld/config.hpp"
#include "seld/embedding.hpp"
#include "seld/metrics.hpp"
#include "seld/pipeline.hpp"
#include "seld/random.hpp"
#include "seld/scene.hpp"
#include "seld/training.hpp"

namespace seld::testing {

/// Desk-scale run: 4 stub classes with orthogonal anchors, one-minute scenes
/// with at most two overlapping events.
inline RunConfig desk_scale_config() {
  RunConfig c;
  c.seed = 2024;
  c.features.amplitude_scale = 0.1;
  c.simulation.n_scenes = 64;
  c.simulation.n_validation_scenes = 16;
  c.simulation.scene.n_classes = 4;
  c.simulation.scene.max_polyphony = 2;
  c.simulation.scene.noise_level = 0.02;
  c.embedding.orthogonalize = true;
  c.train.iterations = 3000;
  c.train.batch_size = 8;
  c.optimizer.peak_lr = 1e-3;
  c.optimizer.warmup_iterations = 200;
  c.optimizer.decay_interval = 500;
  c.optimizer.decay_factor = 0.8;
  return c;
}

struct DeskWorld {
  RunConfig config;
  SourceBank bank;
  StubEmbeddingProvider provider;
  SegmentGeometry geometry;
  std::vector<Scene> train_scenes;
  std::vector<Scene> test_scenes;
  std::vector<TrainingScene> training;
};

inline StubOptions stub_options(const RunConfig& c) {
  StubOptions o;
  o.dim = c.embedding.dim;
  o.seed = derive_seed(c.seed, "stub-provider");
  o.class_names = c.embedding.class_names;
  o.audio_noise_level = c.embedding.audio_noise_level;
  o.orthogonalize = c.embedding.orthogonalize;
  return o;
}

inline std::unique_ptr<DeskWorld> build_desk_world(const RunConfig& c) {
  const auto& sc = c.simulation.scene;
  auto w = std::unique_ptr<DeskWorld>(new DeskWorld{
      c, SourceBank(sc.sample_rate, default_class_bands(sc.n_classes), derive_seed(c.seed, "source-bank")),
      StubEmbeddingProvider(stub_options(c)), SegmentGeometry{c.features, c.network.time_pooling()}, {}, {}, {}});
  for (int i = 0; i < c.simulation.n_scenes; ++i) {
    w->train_scenes.push_back(generate_scene(sc, derive_seed(c.seed, "scene", static_cast<std::uint64_t>(i))));
  }
  for (int i = 0; i < c.simulation.n_validation_scenes; ++i) {
    w->test_scenes.push_back(generate_scene(sc, derive_seed(c.seed, "held-out-scene", static_cast<std::uint64_t>(i))));
  }
  for (const auto& s : w->train_scenes) {
    w->training.push_back({std::make_shared<SceneAudio>(s, w->bank),
                           oracle_targets(s.annotation, w->provider, c.network.n_tracks, &w->bank, sc.sample_rate)});
  }
  return w;
}

/// Trains from the configured seed; `log` receives (iteration, loss) every 100 steps.
inline EmbedAccdoaNet<float> train_desk_model(const DeskWorld& w,
                                              const std::function<void(int, double)>& log = nullptr) {
  const auto& c = w.config;
  EmbedAccdoaNet<float> net(c.network, derive_seed(c.seed, "network"));
  auto state = make_adam_state(net.params());
  BatchSampler sampler(w.training, w.geometry, c.seed);
  double running = 0.0;
  for (int it = 1; it <= c.train.iterations; ++it) {
    const auto batch = sampler.next(c.train.batch_size);
    running += train_step(net, batch, state, c.loss, c.optimizer).loss;
    if (it % 100 == 0) {
      if (log) log(it, running / 100.0);
      running = 0.0;
    }
  }
  return net;
}

inline SupportSet zero_shot_support(const DeskWorld& w) {
  return build_support_zero(w.config.embedding.class_names, w.provider);
}

inline SupportSet few_shot_support(const DeskWorld& w, int shots) {
  const auto& names = w.config.embedding.class_names;
  std::vector<std::vector<AudioClip>> per_class(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    for (int k = 0; k < shots; ++k) {
      AudioClip clip;
      clip.tag = SynthTag{static_cast<int>(c), derive_seed(w.config.seed, "support-shot", c * 1000 + k)};
      clip.key = synth_key(*clip.tag);
      per_class[c].push_back(std::move(clip));
    }
  }
  std::vector<AudioClip> background;
  for (int k = 0; k < shots; ++k) {
    AudioClip clip;
    clip.tag = SynthTag{kBackgroundClass, derive_seed(w.config.seed, "support-background", k)};
    clip.key = synth_key(*clip.tag);
    background.push_back(std::move(clip));
  }
  return build_support_few(names, per_class, background, w.provider);
}

struct HeldOutScene {
  std::vector<AnnotationRecord> references;
  SceneOutputs outputs;
  std::vector<Embedding> segment_embeddings;
};

inline std::vector<HeldOutScene> run_held_out(const DeskWorld& w, const EmbedAccdoaNet<float>& net) {
  std::vector<HeldOutScene> out;
  for (const auto& s : w.test_scenes) {
    HeldOutScene h;
    h.references = annotation_records(s.annotation);
    h.outputs = predict(net, SceneAudio(s, w.bank), w.geometry, s.annotation.num_frames());
    for (const auto& clip : segment_clips(s, w.bank, w.geometry)) h.segment_embeddings.push_back(w.provider.audio_embed(clip));
    out.push_back(std::move(h));
  }
  return out;
}

/// Decodes every held-out scene and scores them with one shared accumulator.
inline MetricsReport score_held_out(const std::vector<HeldOutScene>& scenes, const SupportSet& support,
                                    const DecoderConfig& decoder, const MetricsConfig& metrics = {}) {
  MetricCounts counts;
  for (const auto& h : scenes) {
    const auto frames = decode_scene(h.outputs, support, decoder, h.segment_embeddings);
    const auto preds = detection_records(frames);
    counts += evaluate(h.references, preds, metrics).counts;
  }
  return finalize(counts);
}

}  // namespace seld::testing
