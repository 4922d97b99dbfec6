#include "seld/training.hpp"

#include <cmath>
#include <string>

#include "seld/error.hpp"

namespace seld {

void OptimizerConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::configuration, "optimizer config: " + what); };
  if (!(peak_lr >= 0.0)) bad("peak_lr must be >= 0");
  if (warmup_iterations < 0) bad("warmup_iterations must be >= 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) bad("decay_factor must be in (0, 1]");
  if (decay_interval < 1) bad("decay_interval must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) bad("betas must be in [0, 1)");
  if (!(epsilon > 0.0)) bad("epsilon must be > 0");
  if (!(weight_decay >= 0.0)) bad("weight_decay must be >= 0");
}

double learning_rate(const OptimizerConfig& config, std::int64_t iteration) noexcept {
  const std::int64_t w = config.warmup_iterations;
  if (iteration <= w) return config.peak_lr * static_cast<double>(iteration) / static_cast<double>(w);
  const auto steps = (iteration - w) / config.decay_interval;
  return config.peak_lr * std::pow(config.decay_factor, static_cast<double>(steps));
}

AdamState make_adam_state(const ParamStore<float>& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_update(ParamStore<float>& params, const ParamStore<float>& grads, AdamState& state, double lr,
                 const OptimizerConfig& config) {
  if (!params.same_layout(grads) || !params.same_layout(state.m) || !params.same_layout(state.v)) {
    fail(ErrorKind::shape, "optimizer state does not match the parameter layout");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const float b1 = static_cast<float>(config.beta1), b2 = static_cast<float>(config.beta2);
  const float wd = static_cast<float>(config.weight_decay);
  const float step_size = static_cast<float>(lr / c1);
  const float inv_c2 = static_cast<float>(1.0 / c2);
  const float eps = static_cast<float>(config.epsilon);
  for (std::size_t ti = 0; ti < params.count(); ++ti) {
    auto& p = params[ti].data;
    const auto& g = grads[ti].data;
    auto& m = state.m[ti].data;
    auto& v = state.v[ti].data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const float gi = g[i] + wd * p[i];
      m[i] = b1 * m[i] + (1.0f - b1) * gi;
      v[i] = b2 * v[i] + (1.0f - b2) * gi * gi;
      if (lr != 0.0) p[i] -= step_size * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
    }
  }
}

double batch_gradient(const EmbedAccdoaNet<float>& net, std::span<const TrainingExample> batch,
                      const LossConfig& loss, ParamStore<float>& grads) {
  if (batch.empty()) fail(ErrorKind::empty_input, "training batch is empty");
  const auto& cfg = net.config();
  const float scale = 1.0f / static_cast<float>(batch.size());
  double total = 0.0;
  ForwardCache<float> cache;
  std::vector<float> ge, ga;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& ex = batch[b];
    const auto out = net.forward(ex.features, &cache);
    if (ex.n_frames != out.n_frames) {
      fail(ErrorKind::shape, "training targets have " + std::to_string(ex.n_frames) + " frames, network emits " +
                                 std::to_string(out.n_frames));
    }
    const auto target = ex.targets(cfg.n_tracks, cfg.embed_dim);
    const auto r = pit_loss(target, out.view(), loss);
    if (!std::isfinite(r.loss)) {
      fail(ErrorKind::training_divergence, "non-finite loss on batch item " + std::to_string(b));
    }
    total += r.loss;
    ge.assign(out.embed.size(), 0.0f);
    ga.assign(out.accdoa.size(), 0.0f);
    pit_loss_grad(target, out.view(), loss, r, std::span<float>(ge), std::span<float>(ga), scale);
    net.backward(ge, ga, cache, grads);
  }
  return total / static_cast<double>(batch.size());
}

StepResult train_step(EmbedAccdoaNet<float>& net, std::span<const TrainingExample> batch, AdamState& state,
                      const LossConfig& loss, const OptimizerConfig& optimizer) {
  auto grads = net.params().zeros_like();
  const double value = batch_gradient(net, batch, loss, grads);
  for (const auto& t : grads) {
    for (float g : t.data) {
      if (!std::isfinite(g)) {
        fail(ErrorKind::training_divergence, "non-finite gradient in '" + t.name + "' at iteration " +
                                                 std::to_string(state.step + 1) + " (loss " +
                                                 std::to_string(value) + ")");
      }
    }
  }
  const double lr = learning_rate(optimizer, state.step + 1);
  adam_update(net.params(), grads, state, lr, optimizer);
  return {value, lr};
}

double evaluate_loss(const EmbedAccdoaNet<float>& net, std::span<const TrainingExample> examples,
                     const LossConfig& loss) {
  if (examples.empty()) return 0.0;
  const auto& cfg = net.config();
  double total = 0.0;
  for (const auto& ex : examples) {
    const auto out = net.forward(ex.features);
    total += pit_loss(ex.targets(cfg.n_tracks, cfg.embed_dim), out.view(), loss).loss;
  }
  return total / static_cast<double>(examples.size());
}

}  // namespace seld
