#include "seld/decoder.hpp"

#include <algorithm>
#include <string>

#include "seld/error.hpp"

namespace seld {

void DecoderConfig::validate() const {
  if (!(sigma_a >= 0.0 && sigma_a <= sigma_b && sigma_b <= 1.0)) {
    fail(ErrorKind::configuration, "decoder thresholds must satisfy 0 <= sigma_a <= sigma_b <= 1 (got " +
                                       std::to_string(sigma_a) + ", " + std::to_string(sigma_b) + ")");
  }
}

std::vector<int> gate_tracks(std::span<const AccdoaVector> frame, const DecoderConfig& config) {
  std::vector<int> passing;
  if (frame.empty()) return passing;
  std::size_t top = 0;
  for (std::size_t n = 1; n < frame.size(); ++n) {
    if (frame[n].norm() > frame[top].norm()) top = n;
  }
  for (std::size_t n = 0; n < frame.size(); ++n) {
    const double threshold = n == top ? config.sigma_a : config.sigma_b;
    if (frame[n].norm() >= threshold) passing.push_back(static_cast<int>(n));
  }
  return passing;
}

ClassAssignment assign_class(std::span<const float> embedding, const SupportSet& support, bool with_noise) {
  if (support.class_embeddings.empty()) fail(ErrorKind::empty_input, "support set has no classes");
  if (static_cast<int>(embedding.size()) != support.dim()) {
    fail(ErrorKind::shape, "embedding of size " + std::to_string(embedding.size()) +
                               " does not match support dimension " + std::to_string(support.dim()));
  }
  if (norm(embedding) == 0.0) return {kNoiseClass, 0.0};
  ClassAssignment best{0, cosine(embedding, support.class_embeddings[0])};
  for (int c = 1; c < support.num_classes(); ++c) {
    const double s = cosine(embedding, support.class_embeddings[static_cast<std::size_t>(c)]);
    if (s > best.similarity) best = {c, s};
  }
  if (with_noise) {
    const double s = cosine(embedding, support.noise_embedding);
    if (s > best.similarity) best = {kNoiseClass, s};
  }
  return best;
}

std::vector<Detection> decode_frame(const TrackFramesView<float>& output, int frame, const SupportSet& support,
                                    const DecoderConfig& config, int label_frame) {
  std::vector<AccdoaVector> tracks(static_cast<std::size_t>(output.n_tracks));
  for (int n = 0; n < output.n_tracks; ++n) {
    const auto p = output.accdoa_at(frame, n);
    tracks[static_cast<std::size_t>(n)] = {p[0], p[1], p[2]};
  }
  std::vector<Detection> out;
  for (int n : gate_tracks(tracks, config)) {
    const auto decoded = decode_accdoa(tracks[static_cast<std::size_t>(n)]);
    if (!decoded.doa) continue;
    const auto cls = assign_class(output.embedding(frame, n), support, config.use_noise_rejection);
    if (cls.class_id == kNoiseClass) continue;
    Detection d{label_frame, cls.class_id, *decoded.doa, decoded.activity, n};
    auto same = std::find_if(out.begin(), out.end(), [&](const Detection& e) { return e.class_id == d.class_id; });
    if (same == out.end()) {
      out.push_back(d);
    } else if (d.activity > same->activity) {
      *same = d;
    }
  }
  return out;
}

void apply_clap_override(std::span<std::vector<Detection>> frames, const SupportSet& support,
                         std::span<const float> segment_embedding) {
  const int cls = assign_class(segment_embedding, support, false).class_id;
  if (cls == kNoiseClass) return;
  for (auto& f : frames) {
    if (f.size() == 1) f.front().class_id = cls;
  }
}

std::vector<std::vector<Detection>> decode_with_clap_override(const TrackFramesView<float>& output,
                                                              std::span<const int> model_frame_of,
                                                              int first_label_frame, const SupportSet& support,
                                                              const std::optional<Embedding>& segment_embedding,
                                                              const DecoderConfig& config) {
  if (config.use_clap_combination && !segment_embedding) {
    fail(ErrorKind::configuration, "CLAP combination is enabled but no segment embedding was provided");
  }
  std::vector<std::vector<Detection>> frames;
  frames.reserve(model_frame_of.size());
  for (std::size_t i = 0; i < model_frame_of.size(); ++i) {
    frames.push_back(
        decode_frame(output, model_frame_of[i], support, config, first_label_frame + static_cast<int>(i)));
  }
  if (config.use_clap_combination) apply_clap_override(frames, support, *segment_embedding);
  return frames;
}

}  // namespace seld
