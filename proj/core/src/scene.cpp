#include "seld/scene.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "seld/error.hpp"
#include "seld/random.hpp"

namespace seld {
namespace {

constexpr double kFrameEps = 1e-9;
constexpr double kFadeSeconds = 0.01;

void check_event(const EventSpec& e, double scene_len, std::size_t index) {
  if (!(e.onset >= 0.0 && e.onset < e.offset && e.offset <= scene_len + kFrameEps)) {
    fail(ErrorKind::range, "event " + std::to_string(index) + " [" + std::to_string(e.onset) + ", " +
                               std::to_string(e.offset) + ") does not fit in a " + std::to_string(scene_len) +
                               " s scene");
  }
  if (!(e.gain > 0.0)) {
    fail(ErrorKind::range, "event " + std::to_string(index) + " needs a positive gain");
  }
}

double quantize(double seconds, double q) { return std::round(seconds / q) * q; }

}  // namespace

int SceneAnnotation::max_polyphony() const noexcept {
  std::size_t m = 0;
  for (const auto& f : frame_labels) m = std::max(m, f.size());
  return static_cast<int>(m);
}

std::pair<int, int> label_frame_range(double onset, double offset, double hop) noexcept {
  const int begin = static_cast<int>(std::floor(onset / hop + kFrameEps));
  int end = static_cast<int>(std::ceil(offset / hop - kFrameEps));
  if (end <= begin) end = begin + 1;
  return {begin, end};
}

int label_frame_count(double seconds, double hop) noexcept {
  return std::max(0, static_cast<int>(std::ceil(seconds / hop - kFrameEps)));
}

void rebuild_frame_labels(SceneAnnotation& a, int n_frames) {
  a.frame_labels.assign(static_cast<std::size_t>(std::max(0, n_frames)), {});
  for (std::size_t j = 0; j < a.events.size(); ++j) {
    const auto& e = a.events[j];
    const auto [b, end] = label_frame_range(e.onset, e.offset, a.label_hop);
    for (int l = std::max(0, b); l < std::min(end, n_frames); ++l) {
      a.frame_labels[static_cast<std::size_t>(l)].push_back(
          {e.class_id, static_cast<int>(j), e.direction.azimuth, e.direction.elevation});
    }
  }
}

std::vector<Band> default_class_bands(int n_classes) {
  if (n_classes < 1) {
    fail(ErrorKind::configuration, "need at least one class");
  }
  constexpr double lo = 400.0, hi = 10000.0, guard = 1.08;
  std::vector<Band> bands;
  for (int c = 0; c < n_classes; ++c) {
    const double a = lo * std::pow(hi / lo, static_cast<double>(c) / n_classes);
    const double b = lo * std::pow(hi / lo, static_cast<double>(c + 1) / n_classes);
    bands.push_back({a * guard, b / guard});
  }
  return bands;
}

SourceBank::SourceBank(int sample_rate, std::vector<Band> bands, std::uint64_t seed, int length_log2)
    : rate_(sample_rate), bands_(std::move(bands)) {
  const int n = 1 << length_log2;
  const detail::RealFft fft(n);
  std::vector<double> buf(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.bins()));
  for (std::size_t c = 0; c < bands_.size(); ++c) {
    const auto key = derive_seed(seed, "source-bank", c);
    for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = counter_gaussian(key, static_cast<std::uint64_t>(i));
    fft.forward(buf, spec);
    for (int k = 0; k < fft.bins(); ++k) {
      const double hz = static_cast<double>(k) * sample_rate / n;
      if (hz < bands_[c].low || hz > bands_[c].high) spec[static_cast<std::size_t>(k)] = 0.0;
    }
    fft.inverse(spec, buf);
    double energy = 0.0;
    for (double v : buf) energy += v * v;
    const double rms = std::sqrt(energy / n);
    std::vector<float> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(buf[static_cast<std::size_t>(i)] / rms);
    buffers_.push_back(std::move(out));
  }
}

const Band& SourceBank::band(int class_id) const {
  if (class_id < 0 || class_id >= num_classes()) {
    fail(ErrorKind::range, "no synthetic source for class " + std::to_string(class_id));
  }
  return bands_[static_cast<std::size_t>(class_id)];
}

float SourceBank::sample(int class_id, std::uint64_t variation_seed, std::int64_t i, std::int64_t length) const {
  band(class_id);
  const auto& buf = buffers_[static_cast<std::size_t>(class_id)];
  const auto n = static_cast<std::uint64_t>(buf.size());
  const auto idx = (variation_seed % n + static_cast<std::uint64_t>(i)) % n;
  const auto fade = static_cast<std::int64_t>(kFadeSeconds * rate_);
  double w = 1.0;
  const std::int64_t edge = std::min(i, length - 1 - i);
  if (edge < fade) {
    w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / fade);
  }
  return static_cast<float>(w * buf[idx]);
}

std::pair<std::int64_t, std::int64_t> event_span(const EventSpec& event, int sample_rate) noexcept {
  const auto start = std::llround(event.onset * sample_rate);
  const auto stop = std::llround(event.offset * sample_rate);
  return {start, std::max<std::int64_t>(0, stop - start)};
}

namespace {

float source_sample(const EventSpec& e, std::int64_t i, std::int64_t length, const SourceBank* bank) {
  if (const auto* synth = std::get_if<SynthSource>(&e.source)) {
    if (bank == nullptr) {
      fail(ErrorKind::usage, "synthetic event needs a source bank to render");
    }
    return bank->sample(e.class_id, synth->variation_seed, i, length);
  }
  const auto& wave = std::get<std::vector<float>>(e.source);
  return i < static_cast<std::int64_t>(wave.size()) ? wave[static_cast<std::size_t>(i)] : 0.0f;
}

}  // namespace

std::vector<float> render_source(const EventSpec& event, int sample_rate, const SourceBank* bank) {
  const auto [start, length] = event_span(event, sample_rate);
  std::vector<float> out(static_cast<std::size_t>(length));
  for (std::int64_t i = 0; i < length; ++i) out[static_cast<std::size_t>(i)] = source_sample(event, i, length, bank);
  return out;
}

MultichannelWave spatialize(const EventSpec& event, double scene_len, const SourceBank& bank) {
  check_event(event, scene_len, 0);
  const int rate = bank.sample_rate();
  const auto total = std::llround(scene_len * rate);
  MultichannelWave out(4, static_cast<std::size_t>(total), rate);
  const auto gains = foa_gains(event.direction);
  const auto [start, length] = event_span(event, rate);
  for (std::int64_t i = 0; i < length && start + i < total; ++i) {
    const double s = event.gain * source_sample(event, i, length, &bank);
    for (int c = 0; c < 4; ++c) {
      out.channels[static_cast<std::size_t>(c)][static_cast<std::size_t>(start + i)] = static_cast<float>(gains[c] * s);
    }
  }
  return out;
}

std::int64_t Scene::num_samples() const noexcept { return std::llround(length_seconds * sample_rate); }

MultichannelWave Scene::render(std::int64_t start, std::int64_t count, const SourceBank& bank) const {
  MultichannelWave out(4, static_cast<std::size_t>(std::max<std::int64_t>(0, count)), sample_rate);
  const std::int64_t total = num_samples();
  for (const auto& e : annotation.events) {
    const auto gains = foa_gains(e.direction);
    const auto [s0, length] = event_span(e, sample_rate);
    const std::int64_t lo = std::max(start, s0);
    const std::int64_t hi = std::min({start + count, s0 + length, total});
    for (std::int64_t n = lo; n < hi; ++n) {
      const double s = e.gain * source_sample(e, n - s0, length, &bank);
      for (int c = 0; c < 4; ++c) {
        out.channels[static_cast<std::size_t>(c)][static_cast<std::size_t>(n - start)] += static_cast<float>(gains[c] * s);
      }
    }
  }
  if (noise_level > 0.0) {
    const std::int64_t lo = std::max<std::int64_t>(start, 0);
    const std::int64_t hi = std::min(start + count, total);
    for (int c = 0; c < 4; ++c) {
      const auto key = derive_seed(noise_seed, "diffuse-noise", static_cast<std::uint64_t>(c));
      auto& ch = out.channels[static_cast<std::size_t>(c)];
      for (std::int64_t n = lo; n < hi; ++n) {
        ch[static_cast<std::size_t>(n - start)] +=
            static_cast<float>(noise_level * counter_gaussian(key, static_cast<std::uint64_t>(n)));
      }
    }
  }
  return out;
}

Scene make_scene(std::vector<EventSpec> events, double noise_level, std::uint64_t seed, const MixOptions& options) {
  if (noise_level < 0.0) {
    fail(ErrorKind::range, "noise level must be non-negative");
  }
  for (std::size_t j = 0; j < events.size(); ++j) {
    check_event(events[j], options.scene_len, j);
    if (events[j].key.empty()) {
      if (const auto* synth = std::get_if<SynthSource>(&events[j].source)) {
        events[j].key = synth_key({events[j].class_id, synth->variation_seed});
      }
    }
  }
  Scene scene;
  scene.length_seconds = options.scene_len;
  scene.sample_rate = options.sample_rate;
  scene.noise_level = noise_level;
  scene.noise_seed = derive_seed(seed, "noise");
  scene.annotation.events = std::move(events);
  rebuild_frame_labels(scene.annotation, label_frame_count(options.scene_len));
  const auto& frames = scene.annotation.frame_labels;
  for (std::size_t l = 0; l < frames.size(); ++l) {
    if (static_cast<int>(frames[l].size()) > options.max_polyphony) {
      fail(ErrorKind::generation, "label frame " + std::to_string(l) + " has " + std::to_string(frames[l].size()) +
                                      " simultaneous events; polyphony cap is " +
                                      std::to_string(options.max_polyphony));
    }
  }
  return scene;
}

std::pair<MultichannelWave, SceneAnnotation> mix_scene(std::span<const EventSpec> events, double noise_level,
                                                       std::uint64_t seed, const MixOptions& options,
                                                       const SourceBank& bank) {
  Scene scene = make_scene({events.begin(), events.end()}, noise_level, seed, options);
  auto wave = scene.render_all(bank);
  return {std::move(wave), std::move(scene.annotation)};
}

bool OracleTargets::active(int t, int n) const {
  const auto p = accdoa_at(t, n);
  return p[0] != 0.0f || p[1] != 0.0f || p[2] != 0.0f;
}

OracleTargets oracle_targets(const SceneAnnotation& annotation, const EmbeddingProvider& provider, int n_tracks,
                             const SourceBank* bank, int sample_rate) {
  if (n_tracks < 1) {
    fail(ErrorKind::configuration, "need at least one track");
  }
  OracleTargets o;
  o.n_tracks = n_tracks;
  o.embed_dim = provider.dim();
  o.n_frames = annotation.num_frames();
  const auto nt = static_cast<std::size_t>(n_tracks);
  o.embeddings.assign(static_cast<std::size_t>(o.n_frames) * nt * o.embed_dim, 0.0f);
  o.accdoa.assign(static_cast<std::size_t>(o.n_frames) * nt * 3, 0.0f);
  const auto& events = annotation.events;
  o.event_track.assign(events.size(), -1);

  std::vector<std::size_t> order(events.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return label_frame_range(events[a].onset, events[a].offset, annotation.label_hop).first <
           label_frame_range(events[b].onset, events[b].offset, annotation.label_hop).first;
  });
  std::vector<int> busy_until(nt, -1);  // last occupied label frame per track
  for (const std::size_t j : order) {
    const auto [begin, end] = label_frame_range(events[j].onset, events[j].offset, annotation.label_hop);
    int track = -1;
    for (int n = 0; n < n_tracks; ++n) {
      if (busy_until[static_cast<std::size_t>(n)] < begin) {
        track = n;
        break;
      }
    }
    if (track < 0) {
      fail(ErrorKind::capacity, "more than " + std::to_string(n_tracks) + " events overlap at label frame " +
                                    std::to_string(begin));
    }
    busy_until[static_cast<std::size_t>(track)] = end - 1;
    o.event_track[j] = track;
  }

  o.event_embeddings.resize(events.size());
  for (std::size_t j = 0; j < events.size(); ++j) {
    const auto& e = events[j];
    AudioClip clip;
    clip.key = e.key;
    if (const auto* synth = std::get_if<SynthSource>(&e.source)) {
      clip.tag = SynthTag{e.class_id, synth->variation_seed};
      if (clip.key.empty()) clip.key = synth_key(*clip.tag);
    }
    const bool renderable = bank != nullptr || std::holds_alternative<std::vector<float>>(e.source);
    if (renderable) {
      clip.samples = render_source(e, sample_rate, bank);
      for (auto& s : clip.samples) s = static_cast<float>(e.gain * s);
    }
    o.event_embeddings[j] = provider.audio_embed(clip);
    if (static_cast<int>(o.event_embeddings[j].size()) != o.embed_dim) {
      fail(ErrorKind::shape, "provider returned an embedding of the wrong size");
    }
    const auto doa = to_cartesian(e.direction);
    const float p[3] = {static_cast<float>(doa.x), static_cast<float>(doa.y), static_cast<float>(doa.z)};
    const auto [begin, end] = label_frame_range(e.onset, e.offset, annotation.label_hop);
    const auto n = static_cast<std::size_t>(o.event_track[j]);
    for (int t = std::max(0, begin); t < std::min(end, o.n_frames); ++t) {
      const std::size_t slot = static_cast<std::size_t>(t) * nt + n;
      std::copy(o.event_embeddings[j].begin(), o.event_embeddings[j].end(),
                o.embeddings.begin() + static_cast<std::ptrdiff_t>(slot * o.embed_dim));
      std::copy(p, p + 3, o.accdoa.begin() + static_cast<std::ptrdiff_t>(slot * 3));
    }
  }
  return o;
}

std::pair<MultichannelWave, SceneAnnotation> rotate_foa(const MultichannelWave& wave,
                                                        const SceneAnnotation& annotation, int rotation_id) {
  const FoaRotation rot(rotation_id);
  if (wave.num_channels() != 4) {
    fail(ErrorKind::format, "FOA rotation needs 4 channels");
  }
  const auto& m = rot.matrix();
  MultichannelWave out = wave;
  const auto& in = wave.channels;
  for (std::size_t i = 0; i < wave.num_samples(); ++i) {
    const float v[3] = {in[3][i], in[1][i], in[2][i]};  // (x, y, z) from ACN (W, Y, Z, X)
    float r[3];
    for (int a = 0; a < 3; ++a) r[a] = static_cast<float>(m[a][0]) * v[0] + static_cast<float>(m[a][1]) * v[1] +
                                       static_cast<float>(m[a][2]) * v[2];
    out.channels[3][i] = r[0];
    out.channels[1][i] = r[1];
    out.channels[2][i] = r[2];
  }
  SceneAnnotation ann = annotation;
  for (auto& e : ann.events) e.direction = rot.apply(e.direction);
  rebuild_frame_labels(ann, annotation.num_frames());
  return {std::move(out), std::move(ann)};
}

Scene generate_scene(const SceneGenConfig& cfg, std::uint64_t scene_seed) {
  if (cfg.n_classes < 1 || cfg.max_polyphony < 1 || !(cfg.min_event > 0.0) || cfg.max_event < cfg.min_event ||
      cfg.max_gap < cfg.min_gap || cfg.min_gap < 0.0 || !(cfg.scene_seconds > 0.0)) {
    fail(ErrorKind::configuration, "inconsistent scene generation settings");
  }
  constexpr double q = kLabelHop;
  Stream rng(derive_seed(scene_seed, "scene-layout"));
  struct Placed {
    EventSpec event;
    int layer;
  };
  std::vector<Placed> placed;
  for (int layer = 0; layer < cfg.max_polyphony; ++layer) {
    double t = quantize(rng.uniform(0.0, cfg.max_gap), q);
    while (t + cfg.min_event <= cfg.scene_seconds + 1e-9) {
      double dur = std::max(q, quantize(rng.uniform(cfg.min_event, cfg.max_event), q));
      if (t + dur > cfg.scene_seconds) dur = quantize(cfg.scene_seconds - t, q);
      const double onset = t, offset = quantize(t + dur, q);
      std::vector<int> allowed;
      for (int c = 0; c < cfg.n_classes; ++c) {
        const bool clash = cfg.distinct_overlap_classes &&
                           std::any_of(placed.begin(), placed.end(), [&](const Placed& p) {
                             return p.event.class_id == c && p.event.onset < offset - 1e-9 &&
                                    onset < p.event.offset - 1e-9;
                           });
        if (!clash) allowed.push_back(c);
      }
      const double az = rng.uniform(-180.0, 180.0);
      const double el = rng.uniform(cfg.min_elevation, cfg.max_elevation);
      const double gain = rng.uniform(cfg.min_gain, cfg.max_gain);
      const auto pick = rng.below(allowed.empty() ? 1 : allowed.size());
      const auto variation = rng.next_u64();
      if (!allowed.empty() && offset > onset) {
        EventSpec e;
        e.class_id = allowed[pick];
        e.onset = onset;
        e.offset = offset;
        e.direction = {wrap_azimuth(az), el};
        e.gain = gain;
        e.source = SynthSource{variation};
        e.key = synth_key({e.class_id, variation});
        placed.push_back({std::move(e), layer});
      }
      t = offset + quantize(rng.uniform(cfg.min_gap, cfg.max_gap), q);
    }
  }
  std::stable_sort(placed.begin(), placed.end(),
                   [](const Placed& a, const Placed& b) { return a.event.onset < b.event.onset; });
  std::vector<EventSpec> events;
  events.reserve(placed.size());
  for (auto& p : placed) events.push_back(std::move(p.event));
  return make_scene(std::move(events), cfg.noise_level, scene_seed,
                    {cfg.scene_seconds, cfg.sample_rate, cfg.max_polyphony});
}

}  // namespace seld
