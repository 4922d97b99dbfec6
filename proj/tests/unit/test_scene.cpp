#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "seld/error.hpp"
#include "seld/scene.hpp"

using namespace seld;

namespace {

SourceBank small_bank() { return SourceBank(24000, default_class_bands(4), 77, 14); }

EventSpec event(int cls, double on, double off, SphericalDirection dir, std::uint64_t var = 1) {
  EventSpec e;
  e.class_id = cls;
  e.onset = on;
  e.offset = off;
  e.direction = dir;
  e.source = SynthSource{var};
  return e;
}

StubEmbeddingProvider stub() {
  StubOptions o;
  o.seed = 3;
  o.class_names = {"a", "b", "c", "d"};
  return StubEmbeddingProvider(o);
}

}  // namespace

TEST_CASE("label frame ranges") {
  CHECK(label_frame_range(0.0, 1.0) == std::pair{0, 10});
  CHECK(label_frame_range(0.25, 0.31) == std::pair{2, 4});
  CHECK(label_frame_count(2.0) == 20);
}

TEST_CASE("class bands are disjoint and ordered") {
  const auto bands = default_class_bands(5);
  REQUIRE(bands.size() == 5);
  CHECK(bands.front().low >= 400.0);
  CHECK(bands.back().high <= 10000.0);
  for (std::size_t i = 0; i < bands.size(); ++i) {
    CHECK(bands[i].low < bands[i].high);
    if (i > 0) CHECK(bands[i].low > bands[i - 1].high);
  }
}

TEST_CASE("a frontal source puts W in X") {
  const auto bank = small_bank();
  const auto w = spatialize(event(0, 0.1, 0.4, {0.0, 0.0}), 0.5, bank);
  CHECK(w.channels[3] == w.channels[0]);
  for (float s : w.channels[1]) CHECK(s == Approx(0.0f).margin(1e-7));
}

TEST_CASE("an overhead source silences Y and X") {
  const auto bank = small_bank();
  const auto w = spatialize(event(1, 0.0, 0.3, {30.0, 90.0}), 0.3, bank);
  double energy = 0;
  for (float s : w.channels[0]) energy += s * s;
  CHECK(energy > 0);
  for (int c : {1, 3}) {
    for (float s : w.channels[c]) REQUIRE(std::abs(s) < 1e-6f);
  }
}

TEST_CASE("spatialisation is linear in the gain") {
  const auto bank = small_bank();
  auto e = event(2, 0.0, 0.2, {45.0, 10.0});
  const auto a = spatialize(e, 0.2, bank);
  e.gain = 2.0;
  const auto b = spatialize(e, 0.2, bank);
  for (int c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < a.num_samples(); ++i) REQUIRE(b.channels[c][i] == Approx(2.0f * a.channels[c][i]));
  }
  CHECK_THROWS_AS(spatialize(event(0, 0.1, 0.5, {}), 0.3, bank), Error);
}

TEST_CASE("mixtures are sums of their events") {
  const auto bank = small_bank();
  MixOptions opt;
  opt.scene_len = 1.0;
  const std::vector<EventSpec> one{event(0, 0.1, 0.5, {20.0, 0.0})};
  const auto [m1, a1] = mix_scene(one, 0.0, 1, opt, bank);
  CHECK(m1.channels == spatialize(one[0], 1.0, bank).channels);
  CHECK(a1.num_frames() == 10);
  CHECK(a1.frame_labels[0].empty());
  CHECK(a1.frame_labels[1].size() == 1);

  const std::vector<EventSpec> two{event(0, 0.0, 0.3, {20.0, 0.0}), event(1, 0.5, 0.9, {-60.0, 10.0})};
  const auto [m2, a2] = mix_scene(two, 0.0, 1, opt, bank);
  const auto e0 = spatialize(two[0], 1.0, bank), e1 = spatialize(two[1], 1.0, bank);
  for (int c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < m2.num_samples(); ++i) {
      REQUIRE(m2.channels[c][i] == Approx(e0.channels[c][i] + e1.channels[c][i]).margin(1e-7));
    }
  }

  const auto [noise, empty] = mix_scene({}, 0.1, 9, opt, bank);
  CHECK(empty.events.empty());
  double power = 0;
  for (float s : noise.channels[0]) power += s * s;
  CHECK(std::sqrt(power / noise.num_samples()) == Approx(0.1).epsilon(0.05));
}

TEST_CASE("the polyphony cap is enforced") {
  const auto bank = small_bank();
  MixOptions opt;
  opt.scene_len = 1.0;
  opt.max_polyphony = 2;
  const std::vector<EventSpec> three{event(0, 0.0, 0.5, {}), event(1, 0.1, 0.6, {}), event(2, 0.2, 0.7, {})};
  try {
    mix_scene(three, 0.0, 1, opt, bank);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::generation);
  }
}

TEST_CASE("lazy rendering matches the full mixture") {
  const auto bank = small_bank();
  MixOptions opt;
  opt.scene_len = 2.0;
  const std::vector<EventSpec> evs{event(0, 0.2, 1.1, {20.0, 5.0}), event(3, 0.9, 1.8, {-120.0, -30.0})};
  const auto [full, ann] = mix_scene(evs, 0.05, 4, opt, bank);
  const auto scene = make_scene(evs, 0.05, 4, opt);
  const auto part = scene.render(10000, 5000, bank);
  for (int c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < 5000; ++i) REQUIRE(part.channels[c][i] == Approx(full.channels[c][10000 + i]).margin(1e-6));
  }
}

TEST_CASE("oracle targets assign tracks") {
  const auto bank = small_bank();
  const auto provider = stub();
  MixOptions opt;
  opt.scene_len = 1.0;
  const std::vector<EventSpec> one{event(1, 0.0, 0.5, {90.0, 0.0})};
  const auto ann1 = mix_scene(one, 0.0, 1, opt, bank).second;
  const auto t1 = oracle_targets(ann1, provider, 3, &bank);
  CHECK(t1.active(0, 0));
  CHECK_FALSE(t1.active(0, 1));
  CHECK_FALSE(t1.active(0, 2));
  CHECK(t1.accdoa_at(2, 0)[1] == Approx(1.0f));
  CHECK_FALSE(t1.active(7, 0));
  CHECK(norm(t1.embedding(0, 0)) == Approx(1.0));

  const std::vector<EventSpec> two{event(0, 0.0, 0.6, {}), event(2, 0.3, 0.9, {})};
  const auto ann2 = mix_scene(two, 0.0, 1, opt, bank).second;
  const auto t2 = oracle_targets(ann2, provider, 3, &bank);
  CHECK(t2.event_track[0] != t2.event_track[1]);
  CHECK_THROWS_AS(oracle_targets(ann2, provider, 1, &bank), Error);
}

TEST_CASE("FOA rotation moves audio and labels together") {
  const auto bank = small_bank();
  MixOptions opt;
  opt.scene_len = 0.5;
  const std::vector<EventSpec> evs{event(0, 0.0, 0.5, {30.0, 20.0})};
  const auto [wave, ann] = mix_scene(evs, 0.0, 1, opt, bank);
  const auto [same, same_ann] = rotate_foa(wave, ann, 0);
  CHECK(same.channels == wave.channels);
  CHECK(same_ann.frame_labels == ann.frame_labels);
  for (int id = 1; id < FoaRotation::kCount; ++id) {
    const auto [rw, ra] = rotate_foa(wave, ann, id);
    const auto dir = FoaRotation(id).apply(SphericalDirection{30.0, 20.0});
    CHECK(ra.frame_labels[0][0].azimuth == Approx(dir.azimuth));
    const auto expected = spatialize(event(0, 0.0, 0.5, dir), 0.5, bank);
    for (int c = 0; c < 4; ++c) {
      for (std::size_t i = 0; i < rw.num_samples(); i += 97) {
        REQUIRE(rw.channels[c][i] == Approx(expected.channels[c][i]).margin(1e-6));
      }
    }
  }
  CHECK_THROWS_AS(rotate_foa(wave, ann, 16), Error);
}

TEST_CASE("generated scenes respect their configuration") {
  SceneGenConfig cfg;
  cfg.scene_seconds = 20.0;
  const auto a = generate_scene(cfg, 5), b = generate_scene(cfg, 5);
  CHECK(a.annotation.frame_labels == b.annotation.frame_labels);
  CHECK(a.annotation.num_frames() == 200);
  CHECK(a.annotation.max_polyphony() <= 2);
  for (const auto& frame : a.annotation.frame_labels) {
    if (frame.size() == 2) CHECK(frame[0].class_id != frame[1].class_id);
    for (const auto& l : frame) {
      CHECK(l.elevation >= -45.0);
      CHECK(l.elevation <= 45.0);
    }
  }
  CHECK_FALSE(generate_scene(cfg, 6).annotation.frame_labels == a.annotation.frame_labels);
}
