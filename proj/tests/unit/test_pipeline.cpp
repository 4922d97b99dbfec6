#include <catch2/catch.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "seld/annotation.hpp"
#include "seld/pipeline.hpp"

using namespace seld;

namespace {

struct SmallWorld {
  SourceBank bank{24000, default_class_bands(2), 5, 14};
  StubEmbeddingProvider provider{[] {
    StubOptions o;
    o.seed = 1;
    o.class_names = {"a", "b"};
    return o;
  }()};
  std::vector<Scene> scenes;
  std::vector<TrainingScene> training;

  SmallWorld() {
    SceneGenConfig cfg;
    cfg.scene_seconds = 4.0;
    cfg.n_classes = 2;
    for (std::uint64_t s = 0; s < 2; ++s) scenes.push_back(generate_scene(cfg, 10 + s));
    for (const auto& sc : scenes) {
      training.push_back({std::make_shared<SceneAudio>(sc, bank), oracle_targets(sc.annotation, provider, 3, &bank)});
    }
  }
};

}  // namespace

TEST_CASE("segment geometry for the default features") {
  const SegmentGeometry g;
  CHECK(g.padded_frames() == 128);
  CHECK(g.output_frames() == 16);
  CHECK(g.segment_samples() == 30720);
  CHECK(g.segment_start_sample(2) == 2 * 120 * 240);
  CHECK(g.feature_frames(24000) == 99);
  CHECK(g.segment_count(60 * 24000) == segment_count(g.feature_frames(60 * 24000), 127, 120));
}

TEST_CASE("every label frame maps to a nearby model frame") {
  const SegmentGeometry g;
  const int n_labels = 600;
  const int n_segments = g.segment_count(60 * 24000);
  for (int l = 0; l < n_labels; ++l) {
    const auto [k, j] = g.locate_label_frame(l, n_segments);
    REQUIRE(k >= 0);
    REQUIRE(k < n_segments);
    REQUIRE(j >= 0);
    REQUIRE(j < g.output_frames());
    REQUIRE(std::abs(g.output_frame_time(k, j) - (l + 0.5) * 0.1) <= 0.06);
  }
  CHECK(g.label_frame_of_output(0, 0) == 0);
  CHECK(g.label_frame_of_output(1, 0) == static_cast<int>(std::floor(g.output_frame_time(1, 0) / 0.1)));
}

TEST_CASE("examples carry features and resampled targets") {
  SmallWorld w;
  const SegmentGeometry g;
  const auto ex = make_example(*w.training[0].audio, w.training[0].targets, g, 0);
  CHECK(ex.features.frames == 128);
  CHECK(ex.features.channels == 7);
  CHECK(ex.n_frames == 16);
  CHECK(ex.embed.size() == 16u * 3 * 512);
  CHECK(ex.accdoa.size() == 16u * 3 * 3);
  for (int j = 0; j < ex.n_frames; ++j) {
    const int l = g.label_frame_of_output(0, j);
    for (int n = 0; n < 3; ++n) {
      for (int c = 0; c < 3; ++c) REQUIRE(ex.accdoa[(j * 3 + n) * 3 + c] == w.training[0].targets.accdoa_at(l, n)[c]);
    }
  }
}

TEST_CASE("the batch sampler resumes from its position") {
  SmallWorld w;
  const SegmentGeometry g;
  BatchSampler a(w.training, g, 3);
  CHECK(a.size() == 2u * static_cast<std::size_t>(g.segment_count(4 * 24000)));
  a.next(2);
  const auto pos = a.position();
  CHECK(pos == 2);
  const auto expected = a.next(2);
  BatchSampler b(w.training, g, 3);
  b.set_position(pos);
  const auto resumed = b.next(2);
  REQUIRE(resumed.size() == 2);
  for (int i = 0; i < 2; ++i) CHECK(resumed[i].features.values == expected[i].features.values);
}

TEST_CASE("reference rows rebuild the annotation") {
  SmallWorld w;
  const auto rows = annotation_records(w.scenes[0].annotation);
  const auto ann = annotation_from_records(rows, w.scenes[0].annotation.num_frames());
  CHECK(annotation_records(ann) == rows);
  for (const auto& e : ann.events) CHECK(e.key.rfind("event:", 0) == 0);
}

TEST_CASE("segment clips are tagged by the dominant class") {
  SmallWorld w;
  const SegmentGeometry g;
  const auto clips = segment_clips(w.scenes[0], w.bank, g);
  CHECK(static_cast<int>(clips.size()) == g.segment_count(w.scenes[0].num_samples()));
  for (const auto& c : clips) {
    CHECK(c.samples.size() == static_cast<std::size_t>(g.segment_samples()));
    REQUIRE(c.tag);
    CHECK(c.tag->class_id >= kBackgroundClass);
    CHECK(c.tag->class_id < 2);
  }
}
