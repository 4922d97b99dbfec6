#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seld/features.hpp"
#include "seld/network.hpp"
#include "seld/pit_loss.hpp"

namespace seld {

/// Adam with L2 weight decay, linear warm-up and step decay.
struct OptimizerConfig {
  double peak_lr = 1e-3;
  int warmup_iterations = 250;
  double decay_factor = 0.9;
  int decay_interval = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-6;

  bool operator==(const OptimizerConfig&) const = default;
  void validate() const;
};

/// Learning rate for the `iteration`-th update (1-based).
double learning_rate(const OptimizerConfig& config, std::int64_t iteration) noexcept;

struct AdamState {
  ParamStore<float> m;
  ParamStore<float> v;
  std::int64_t step = 0;
};

AdamState make_adam_state(const ParamStore<float>& params);

/// One Adam update; `step` is advanced and used for bias correction.
void adam_update(ParamStore<float>& params, const ParamStore<float>& grads, AdamState& state, double lr,
                 const OptimizerConfig& config);

/// A segment of features and its targets at the network's output frame rate.
struct TrainingExample {
  FeatureTensor features;
  int n_frames = 0;
  std::vector<float> embed;   ///< n_frames × n_tracks × embed_dim
  std::vector<float> accdoa;  ///< n_frames × n_tracks × 3

  TrackFramesView<float> targets(int n_tracks, int embed_dim) const { return {n_frames, n_tracks, embed_dim, embed, accdoa}; }
};

struct StepResult {
  double loss = 0.0;
  double lr = 0.0;
};

/// Mean PIT loss and its parameter gradient over a batch.
double batch_gradient(const EmbedAccdoaNet<float>& net, std::span<const TrainingExample> batch,
                      const LossConfig& loss, ParamStore<float>& grads);

/// Forward, backward and one optimizer update. Throws training_divergence on a
/// non-finite loss or gradient, leaving the parameters untouched.
StepResult train_step(EmbedAccdoaNet<float>& net, std::span<const TrainingExample> batch, AdamState& state,
                      const LossConfig& loss, const OptimizerConfig& optimizer);

/// Mean PIT loss without gradients.
double evaluate_loss(const EmbedAccdoaNet<float>& net, std::span<const TrainingExample> examples,
                     const LossConfig& loss);

}  // namespace seld
