#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "seld/decoder.hpp"
#include "seld/error.hpp"
#include "seld/random.hpp"

using namespace seld;

namespace {

constexpr int kDim = 8;

Embedding axis(int i, float scale = 1.0f) {
  Embedding e(kDim, 0.0f);
  e[static_cast<std::size_t>(i)] = scale;
  return e;
}

SupportSet axis_support() {
  SupportSet s;
  s.class_names = {"c0", "c1", "c2", "c3"};
  for (int c = 0; c < 4; ++c) s.class_embeddings.push_back(axis(c));
  s.noise_embedding = axis(7);
  return s;
}

/// One model frame with three tracks.
struct Frame {
  std::vector<float> embed = std::vector<float>(3 * kDim, 0.0f);
  std::vector<float> accdoa = std::vector<float>(9, 0.0f);

  void set(int track, const Embedding& e, AccdoaVector p) {
    std::copy(e.begin(), e.end(), embed.begin() + track * kDim);
    accdoa[track * 3] = static_cast<float>(p.x);
    accdoa[track * 3 + 1] = static_cast<float>(p.y);
    accdoa[track * 3 + 2] = static_cast<float>(p.z);
  }
  TrackFramesView<float> view() const { return {1, 3, kDim, embed, accdoa}; }
};

std::vector<AccdoaVector> activities(double a, double b, double c) {
  return {{a, 0, 0}, {0, b, 0}, {0, 0, c}};
}

}  // namespace

TEST_CASE("dual-threshold gating") {
  const DecoderConfig cfg;
  CHECK(gate_tracks(activities(0.5, 0.1, 0.3), cfg) == std::vector<int>{0});
  CHECK(gate_tracks(activities(0.9, 0.85, 0.1), cfg) == std::vector<int>{0, 1});
  CHECK(gate_tracks(activities(0.1, 0.1, 0.1), cfg).empty());
  CHECK(gate_tracks(activities(0.3, 0.9, 0.81), cfg) == std::vector<int>{1, 2});
}

TEST_CASE("gating is monotone in the secondary threshold") {
  Stream rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const auto f = activities(rng.uniform(), rng.uniform(), rng.uniform());
    std::size_t previous = 0;
    for (double sb = 1.0; sb >= 0.2 - 1e-12; sb -= 0.05) {
      DecoderConfig cfg;
      cfg.sigma_b = sb;
      const auto passed = gate_tracks(f, cfg);
      REQUIRE(passed.size() >= previous);
      REQUIRE(passed.size() <= 3);
      previous = passed.size();
    }
  }
}

TEST_CASE("equal thresholds act as one uniform threshold") {
  DecoderConfig cfg;
  cfg.sigma_a = cfg.sigma_b = 0.4;
  CHECK(gate_tracks(activities(0.5, 0.45, 0.3), cfg) == std::vector<int>{0, 1});
}

TEST_CASE("decoder thresholds are validated") {
  DecoderConfig cfg;
  cfg.sigma_a = 0.9;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.sigma_a = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("class assignment") {
  const auto s = axis_support();
  const auto exact = assign_class(axis(2), s);
  CHECK(exact.class_id == 2);
  CHECK(exact.similarity == Approx(1.0));
  CHECK(assign_class(axis(7), s).class_id == kNoiseClass);
  CHECK(assign_class(axis(7), s, false).class_id != kNoiseClass);
  Embedding mix(kDim, 0.0f);
  mix[1] = 0.9f;
  mix[2] = 0.1f;
  CHECK(assign_class(normalized(mix), s).class_id == 1);
  const auto zero = assign_class(Embedding(kDim, 0.0f), s);
  CHECK(zero.class_id == kNoiseClass);
  CHECK(zero.similarity == 0.0);
}

TEST_CASE("class assignment is scale invariant") {
  const auto s = axis_support();
  Stream rng(8);
  for (int i = 0; i < 200; ++i) {
    Embedding e(kDim);
    for (auto& v : e) v = static_cast<float>(rng.gaussian());
    const int id = assign_class(e, s).class_id;
    for (float k : {0.01f, 3.0f, 1000.0f}) {
      Embedding scaled = e;
      for (auto& v : scaled) v *= k;
      REQUIRE(assign_class(scaled, s).class_id == id);
    }
  }
}

TEST_CASE("decode_frame composes gating and assignment") {
  const auto s = axis_support();
  const DecoderConfig cfg;
  Frame empty;
  CHECK(decode_frame(empty.view(), 0, s, cfg, 0).empty());

  Frame one;
  one.set(0, axis(1), {0, 0, 0.5});
  const auto d = decode_frame(one.view(), 0, s, cfg, 12);
  REQUIRE(d.size() == 1);
  CHECK(d[0].class_id == 1);
  CHECK(d[0].doa.z == Approx(1.0));
  CHECK(d[0].activity == Approx(0.5));
  CHECK(d[0].label_frame == 12);

  Frame dup;
  dup.set(0, axis(1), {0.9, 0, 0});
  dup.set(2, axis(1, 2.0f), {0, 0.95, 0});
  const auto dd = decode_frame(dup.view(), 0, s, cfg, 0);
  REQUIRE(dd.size() == 1);
  CHECK(dd[0].track == 2);

  Frame noise;
  noise.set(0, axis(7), {0.9, 0, 0});
  CHECK(decode_frame(noise.view(), 0, s, cfg, 0).empty());
  DecoderConfig keep = cfg;
  keep.use_noise_rejection = false;
  CHECK(decode_frame(noise.view(), 0, s, keep, 0).size() == 1);
}

TEST_CASE("the CLAP override relabels single-detection frames only") {
  const auto s = axis_support();
  std::vector<std::vector<Detection>> frames(3);
  frames[0] = {{0, 0, {1, 0, 0}, 0.9, 0}, {0, 1, {0, 1, 0}, 0.85, 1}};
  frames[1] = {{1, 0, {0, 0, 1}, 0.4, 0}};
  const auto before = frames;
  apply_clap_override(frames, s, axis(3));
  CHECK(frames[0] == before[0]);
  REQUIRE(frames[1].size() == 1);
  CHECK(frames[1][0].class_id == 3);
  CHECK(frames[1][0].doa == before[1][0].doa);
  CHECK(frames[1][0].activity == before[1][0].activity);
  CHECK(frames[2].empty());
}

TEST_CASE("the override path needs a segment embedding") {
  const auto s = axis_support();
  Frame one;
  one.set(0, axis(0), {0.5, 0, 0});
  DecoderConfig cfg;
  cfg.use_clap_combination = true;
  const std::vector<int> map{0, 0};
  CHECK_THROWS_AS(decode_with_clap_override(one.view(), map, 5, s, std::nullopt, cfg), Error);
  const auto out = decode_with_clap_override(one.view(), map, 5, s, axis(2), cfg);
  REQUIRE(out.size() == 2);
  CHECK(out[1][0].label_frame == 6);
  CHECK(out[1][0].class_id == 2);
  cfg.use_clap_combination = false;
  CHECK(decode_with_clap_override(one.view(), map, 5, s, std::nullopt, cfg)[0][0].class_id == 0);
}
