#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "seld/features.hpp"
#include "seld/metrics.hpp"
#include "seld/network.hpp"
#include "seld/pit_loss.hpp"
#include "seld/random.hpp"
#include "seld/wav.hpp"

namespace {

std::vector<float> gaussian(std::size_t n, std::uint64_t key) {
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(seld::counter_gaussian(key, i));
  return v;
}

struct LossFixture {
  static constexpr int kFrames = 127;
  seld::LossConfig config;
  int dim = 512;
  std::vector<float> oracle_embed, oracle_accdoa, pred_embed, pred_accdoa;

  LossFixture() {
    const auto n = static_cast<std::size_t>(kFrames) * config.n_tracks;
    oracle_embed = gaussian(n * dim, 1);
    oracle_accdoa = gaussian(n * 3, 2);
    pred_embed = gaussian(n * dim, 3);
    pred_accdoa = gaussian(n * 3, 4);
  }
  seld::TrackFramesView<float> oracle() const { return {kFrames, config.n_tracks, dim, oracle_embed, oracle_accdoa}; }
  seld::TrackFramesView<float> pred() const { return {kFrames, config.n_tracks, dim, pred_embed, pred_accdoa}; }
};

void BM_PitLossSegment(benchmark::State& state) {
  const LossFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(seld::pit_loss(f.oracle(), f.pred(), f.config).loss);
}
BENCHMARK(BM_PitLossSegment)->Unit(benchmark::kMillisecond);

void BM_PitLossWithGradient(benchmark::State& state) {
  const LossFixture f;
  std::vector<float> ge(f.pred_embed.size()), ga(f.pred_accdoa.size());
  for (auto _ : state) {
    const auto r = seld::pit_loss(f.oracle(), f.pred(), f.config);
    seld::pit_loss_grad(f.oracle(), f.pred(), f.config, r, std::span<float>(ge), std::span<float>(ga));
    benchmark::DoNotOptimize(ge.data());
  }
}
BENCHMARK(BM_PitLossWithGradient)->Unit(benchmark::kMillisecond);

seld::MultichannelWave segment_audio(const seld::FeatureConfig& config) {
  const auto samples = static_cast<std::size_t>((config.seg_frames - 1) * config.hop + config.frame_len);
  seld::MultichannelWave wave(4, samples, config.sample_rate);
  for (int c = 0; c < 4; ++c) wave.channels[static_cast<std::size_t>(c)] = gaussian(samples, 10 + c);
  return wave;
}

void BM_FeatureExtraction(benchmark::State& state) {
  const seld::FeatureConfig config;
  const auto wave = segment_audio(config);
  for (auto _ : state) benchmark::DoNotOptimize(seld::extract_features(wave, config).values.data());
}
BENCHMARK(BM_FeatureExtraction)->Unit(benchmark::kMillisecond);

seld::FeatureTensor padded_features(const seld::NetworkConfig& config) {
  seld::FeatureTensor f(config.input_channels, config.input_bins, 128);
  f.values = gaussian(f.values.size(), 20);
  return f;
}

void BM_NetworkForward(benchmark::State& state) {
  const seld::NetworkConfig config;
  const seld::EmbedAccdoaNet<float> net(config, 7);
  const auto features = padded_features(config);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(features).embed.data());
}
BENCHMARK(BM_NetworkForward)->Unit(benchmark::kMillisecond);

void BM_NetworkForwardBackward(benchmark::State& state) {
  const seld::NetworkConfig config;
  const seld::EmbedAccdoaNet<float> net(config, 7);
  const auto features = padded_features(config);
  auto grads = net.params().zeros_like();
  for (auto _ : state) {
    seld::ForwardCache<float> cache;
    const auto out = net.forward(features, &cache);
    net.backward(out.embed, out.accdoa, cache, grads);
    benchmark::DoNotOptimize(grads[0].data.data());
  }
}
BENCHMARK(BM_NetworkForwardBackward)->Unit(benchmark::kMillisecond);

std::vector<seld::CartesianDOA> directions(int n, std::uint64_t key) {
  std::vector<seld::CartesianDOA> out;
  for (int i = 0; i < n; ++i) {
    const double x = seld::counter_gaussian(key, 3 * i), y = seld::counter_gaussian(key, 3 * i + 1),
                 z = seld::counter_gaussian(key, 3 * i + 2);
    const double r = std::sqrt(x * x + y * y + z * z);
    out.push_back({x / r, y / r, z / r});
  }
  return out;
}

void BM_MatchClassSegment(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto refs = directions(n, 30), preds = directions(n, 31);
  for (auto _ : state) benchmark::DoNotOptimize(seld::match_class_segment(refs, preds).total_distance);
}
BENCHMARK(BM_MatchClassSegment)->Arg(3)->Arg(6)->Arg(12);

}  // namespace

BENCHMARK_MAIN();
