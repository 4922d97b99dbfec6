#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "seld/annotation.hpp"
#include "seld/checkpoint.hpp"
#include "seld/config.hpp"
#include "seld/embedding.hpp"
#include "seld/error.hpp"
#include "seld/metrics.hpp"
#include "seld/pipeline.hpp"
#include "seld/random.hpp"
#include "seld/scene.hpp"
#include "seld/training.hpp"
#include "seld/wav.hpp"

namespace seld::cli {

namespace {

using json = nlohmann::json;

constexpr int kManifestVersion = 1;
constexpr std::string_view kBackgroundLabel = "@background";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_bytes(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string checksum(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

/// Run configuration: the --config file, else `fallback` JSON, else defaults; --seed wins over both.
RunConfig load_config(const GlobalOptions& global, std::string_view fallback = {}) {
  RunConfig config;
  if (global.config) {
    config = read_run_config(*global.config);
  } else if (!fallback.empty()) {
    config = parse_run_config(fallback);
  }
  if (global.seed) config.seed = *global.seed;
  config.validate();
  return config;
}

std::unique_ptr<EmbeddingProvider> make_provider(const RunConfig& config) {
  const auto& e = config.embedding;
  if (e.provider == "table") {
    return std::make_unique<TableEmbeddingProvider>(read_embedding_table(e.table_path, e.dim), e.dim);
  }
  StubOptions o;
  o.dim = e.dim;
  o.seed = derive_seed(config.seed, "stub-provider");
  o.class_names = e.class_names;
  o.audio_noise_level = e.audio_noise_level;
  o.orthogonalize = e.orthogonalize;
  return std::make_unique<StubEmbeddingProvider>(std::move(o));
}

SourceBank make_bank(const RunConfig& config) {
  const auto& sc = config.simulation.scene;
  return SourceBank(sc.sample_rate, default_class_bands(sc.n_classes), derive_seed(config.seed, "source-bank"));
}

SegmentGeometry make_geometry(const RunConfig& config) {
  return SegmentGeometry{config.features, config.network.time_pooling()};
}

void require_out(const GlobalOptions& global, std::string_view verb) {
  if (global.out.empty()) fail(ErrorKind::usage, std::string(verb) + " needs --out");
}

// ---------------------------------------------------------------- simulate

struct ScenePlan {
  std::string name;
  std::string split;
  std::uint64_t seed = 0;
  std::optional<json> script;
};

Scene scripted_scene(const json& spec, const RunConfig& config, std::uint64_t seed) {
  const auto& sc = config.simulation.scene;
  std::vector<EventSpec> events;
  int j = 0;
  for (const auto& ev : spec.at("events")) {
    EventSpec e;
    e.class_id = ev.at("class").get<int>();
    if (e.class_id < 0 || e.class_id >= sc.n_classes) {
      fail(ErrorKind::invalid_input, "event " + std::to_string(j) + " has class " + std::to_string(e.class_id) +
                                         " outside [0, " + std::to_string(sc.n_classes) + ")");
    }
    e.onset = ev.at("onset").get<double>();
    e.offset = ev.at("offset").get<double>();
    e.direction = {ev.at("azimuth").get<double>(), ev.at("elevation").get<double>()};
    e.gain = ev.value("gain", 1.0);
    const SynthTag tag{e.class_id, derive_seed(seed, "event", static_cast<std::uint64_t>(j))};
    e.source = SynthSource{tag.variation_seed};
    e.key = synth_key(tag);
    events.push_back(std::move(e));
    ++j;
  }
  MixOptions mix;
  mix.scene_len = spec.value("seconds", sc.scene_seconds);
  mix.sample_rate = sc.sample_rate;
  mix.max_polyphony = sc.max_polyphony;
  return make_scene(std::move(events), spec.value("noise_level", sc.noise_level), seed, mix);
}

struct SceneFiles {
  std::string wav, csv, emb;
  int label_frames = 0;
  double seconds = 0.0;
};

SceneFiles write_scene(const ScenePlan& plan, const RunConfig& config, const SourceBank& bank,
                       const EmbeddingProvider& provider, const fs::path& dir) {
  const Scene scene = plan.script ? scripted_scene(*plan.script, config, plan.seed)
                                  : generate_scene(config.simulation.scene, plan.seed);
  const auto targets = oracle_targets(scene.annotation, provider, config.network.n_tracks, &bank, scene.sample_rate);
  EmbeddingTable sidecar;
  for (std::size_t j = 0; j < targets.event_embeddings.size(); ++j) {
    sidecar[event_key(static_cast<int>(j))] = targets.event_embeddings[j];
  }
  for (const auto& clip : segment_clips(scene, bank, make_geometry(config))) {
    sidecar[clip.key] = provider.audio_embed(clip);
  }

  const auto wav = encode_wav(scene.render_all(bank));
  const std::string_view wav_bytes(reinterpret_cast<const char*>(wav.data()), wav.size());
  const auto csv = format_annotation_csv(annotation_records(scene.annotation));
  const auto emb = format_embedding_table(sidecar);
  write_bytes(dir / (plan.name + ".wav"), wav_bytes);
  write_bytes(dir / (plan.name + ".csv"), csv);
  write_bytes(dir / (plan.name + ".emb"), emb);
  return {checksum(wav_bytes), checksum(csv), checksum(emb), scene.annotation.num_frames(), scene.length_seconds};
}

std::vector<ScenePlan> plan_scenes(const RunConfig& config, const std::optional<fs::path>& script) {
  std::vector<ScenePlan> plans;
  auto name = [](std::string_view split, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*s_%04zu", static_cast<int>(split.size()), split.data(), i);
    return std::string(buf);
  };
  if (script) {
    json doc;
    try {
      doc = json::parse(read_text(*script));
    } catch (const json::parse_error& e) {
      fail(ErrorKind::parse, script->string() + ": " + e.what());
    }
    for (const auto* split : {"train", "val"}) {
      if (!doc.contains(split)) continue;
      const auto& scenes = doc.at(split);
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        plans.push_back({name(split, i), split, derive_seed(config.seed, std::string("script-") + split, i),
                         std::optional<json>(std::in_place, scenes[i])});
      }
    }
    if (plans.empty()) fail(ErrorKind::invalid_input, script->string() + " defines no scenes");
    return plans;
  }
  for (int i = 0; i < config.simulation.n_scenes; ++i) {
    plans.push_back({name("train", i), "train", derive_seed(config.seed, "scene", static_cast<std::uint64_t>(i)), {}});
  }
  for (int i = 0; i < config.simulation.n_validation_scenes; ++i) {
    plans.push_back(
        {name("val", i), "val", derive_seed(config.seed, "validation-scene", static_cast<std::uint64_t>(i)), {}});
  }
  return plans;
}

// ---------------------------------------------------------------- train

struct LoadedData {
  RunConfig config;
  std::vector<TrainingScene> train;
  std::vector<TrainingScene> val;
};

void verify_checksum(const fs::path& path, std::string_view bytes, const json& expected) {
  if (checksum(bytes) != expected.get<std::string>()) {
    fail(ErrorKind::format, path.string() + " does not match its manifest checksum");
  }
}

LoadedData load_dataset(const GlobalOptions& global, const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) fail(ErrorKind::io, "no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("version", 0) != kManifestVersion) {
    fail(ErrorKind::compatibility, manifest_path.string() + " has an unsupported version");
  }
  LoadedData data;
  data.config = load_config(global, manifest.at("config").dump());
  const auto& c = data.config;
  for (const auto& entry : manifest.at("scenes")) {
    const auto name = entry.at("name").get<std::string>();
    const auto wav_path = dir / (name + ".wav"), csv_path = dir / (name + ".csv"), emb_path = dir / (name + ".emb");
    const auto wav_text = read_text(wav_path), csv_text = read_text(csv_path), emb_text = read_text(emb_path);
    verify_checksum(wav_path, wav_text, entry.at("wav"));
    verify_checksum(csv_path, csv_text, entry.at("csv"));
    verify_checksum(emb_path, emb_text, entry.at("embeddings"));
    auto wave = parse_wav(std::span(reinterpret_cast<const std::uint8_t*>(wav_text.data()), wav_text.size()));
    if (wave.sample_rate != c.features.sample_rate || wave.num_channels() != 4) {
      fail(ErrorKind::compatibility, wav_path.string() + " must be 4-channel audio at " +
                                         std::to_string(c.features.sample_rate) + " Hz");
    }
    const auto records = parse_annotation_csv(csv_text);
    const auto annotation = annotation_from_records(records, entry.at("label_frames").get<int>());
    const TableEmbeddingProvider sidecar(parse_embedding_table(emb_text, c.embedding.dim), c.embedding.dim);
    TrainingScene scene{std::make_shared<WaveAudio>(std::move(wave)),
                        oracle_targets(annotation, sidecar, c.network.n_tracks)};
    (entry.at("split").get<std::string>() == "val" ? data.val : data.train).push_back(std::move(scene));
  }
  if (data.train.empty()) fail(ErrorKind::empty_input, manifest_path.string() + " lists no training scenes");
  return data;
}

fs::path default_log_path(const fs::path& checkpoint) {
  auto p = checkpoint;
  p.replace_extension(".loss.csv");
  return p;
}

std::string format_loss_row(std::int64_t iteration, double train_loss, std::optional<double> val_loss) {
  char buf[96];
  if (val_loss) {
    std::snprintf(buf, sizeof buf, "%" PRId64 ",%.9g,%.9g\n", iteration, train_loss, *val_loss);
  } else {
    std::snprintf(buf, sizeof buf, "%" PRId64 ",%.9g,\n", iteration, train_loss);
  }
  return buf;
}

/// Keeps the header and every row up to `iteration`, dropping rows logged after that checkpoint.
std::string truncate_log(const std::string& text, std::int64_t iteration) {
  std::istringstream in(text);
  std::string out, line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      out += line + '\n';
      header = false;
      continue;
    }
    if (line.empty()) continue;
    if (std::stoll(line.substr(0, line.find(','))) <= iteration) out += line + '\n';
  }
  return out;
}

// ---------------------------------------------------------------- support

std::vector<std::string> class_list(const RunConfig& config, const SupportOptions& options) {
  std::vector<std::string> names = options.classes;
  if (options.class_file) {
    std::istringstream in(read_text(*options.class_file));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) names.push_back(line);
    }
  }
  if (names.empty()) names = config.embedding.class_names;
  return names;
}

AudioClip clip_from_reference(std::string_view ref, const fs::path& base) {
  AudioClip clip;
  const fs::path as_path(ref);
  if (as_path.extension() == ".wav") {
    const auto resolved = as_path.is_absolute() ? as_path : base / as_path;
    auto wave = read_wav(resolved);
    if (wave.num_channels() < 1) fail(ErrorKind::empty_input, resolved.string() + " has no channels");
    clip.key = std::string(ref);
    clip.samples = std::move(wave.channels.front());
    return clip;
  }
  clip.key = std::string(ref);
  clip.tag = parse_synth_key(ref);
  return clip;
}

/// Lines of `<class>\t<clip>`; the clip is a .wav path, a synth key or a table key.
void read_clip_list(const fs::path& path, const std::vector<std::string>& names,
                    std::vector<std::vector<AudioClip>>& shots, std::vector<AudioClip>& background) {
  std::istringstream in(read_text(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": expected <class>\\t<clip>");
    }
    const auto cls = line.substr(0, tab), ref = line.substr(tab + 1);
    auto clip = clip_from_reference(ref, path.parent_path());
    if (cls == kBackgroundLabel) {
      background.push_back(std::move(clip));
      continue;
    }
    const auto it = std::find(names.begin(), names.end(), cls);
    if (it == names.end()) {
      fail(ErrorKind::invalid_input, path.string() + ":" + std::to_string(line_no) + ": unknown class '" + cls + "'");
    }
    shots[static_cast<std::size_t>(it - names.begin())].push_back(std::move(clip));
  }
}

void synthesize_shots(const RunConfig& config, int shots, std::vector<std::vector<AudioClip>>& per_class,
                      std::vector<AudioClip>& background) {
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (int k = 0; k < shots; ++k) {
      AudioClip clip;
      clip.tag = SynthTag{static_cast<int>(c), derive_seed(config.seed, "support-shot", c * 1000 + k)};
      clip.key = synth_key(*clip.tag);
      per_class[c].push_back(std::move(clip));
    }
  }
  for (int k = 0; k < shots; ++k) {
    AudioClip clip;
    clip.tag = SynthTag{kBackgroundClass, derive_seed(config.seed, "support-background", k)};
    clip.key = synth_key(*clip.tag);
    background.push_back(std::move(clip));
  }
}

}  // namespace

int run_simulate(const GlobalOptions& global, const SimulateOptions& options) {
  require_out(global, "simulate");
  const auto config = load_config(global);
  const auto plans = plan_scenes(config, options.script);
  std::error_code ec;
  fs::create_directories(global.out, ec);
  if (ec || !fs::is_directory(global.out)) fail(ErrorKind::io, "cannot create directory " + global.out.string());

  const auto bank = make_bank(config);
  const auto provider = make_provider(config);
  std::vector<SceneFiles> files(plans.size());
  std::vector<std::optional<Error>> errors(plans.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < plans.size();) {
      try {
        files[i] = write_scene(plans[i], config, bank, *provider, global.out);
      } catch (const Error& e) {
        errors[i] = Error(e.kind(), "scene " + std::to_string(i) + " (" + plans[i].name + "): " + e.what());
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto n_threads = std::min<std::size_t>(options.threads > 0 ? static_cast<std::size_t>(options.threads) : hw,
                                               plans.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) throw *e;
  }

  json scenes = json::array();
  for (std::size_t i = 0; i < plans.size(); ++i) {
    scenes.push_back({{"name", plans[i].name},
                      {"split", plans[i].split},
                      {"seed", plans[i].seed},
                      {"seconds", files[i].seconds},
                      {"label_frames", files[i].label_frames},
                      {"wav", files[i].wav},
                      {"csv", files[i].csv},
                      {"embeddings", files[i].emb}});
  }
  const json manifest{{"version", kManifestVersion},
                      {"seed", config.seed},
                      {"checksum", "fnv1a64"},
                      {"config", json::parse(to_json_text(config))},
                      {"scenes", scenes}};
  write_bytes(global.out / "manifest.json", manifest.dump(2) + "\n");
  std::printf("wrote %zu scenes to %s\n", plans.size(), global.out.string().c_str());
  return 0;
}

int run_train(const GlobalOptions& global, const TrainOptions& options) {
  require_out(global, "train");
  auto data = load_dataset(global, options.data);
  const auto& c = data.config;
  const auto geometry = make_geometry(c);
  const auto log_path = options.log.value_or(default_log_path(global.out));

  std::optional<EmbedAccdoaNet<float>> net;
  AdamState state;
  std::int64_t start = 0;
  std::string log_text = "iteration,train_loss,val_loss\n";
  if (options.resume && fs::exists(global.out)) {
    auto ckpt = read_checkpoint(global.out);
    if (!(ckpt.network == c.network)) {
      fail(ErrorKind::compatibility, global.out.string() + " was trained with a different network configuration");
    }
    if (!ckpt.optimizer) fail(ErrorKind::compatibility, global.out.string() + " carries no optimizer state");
    start = ckpt.iteration;
    state = std::move(*ckpt.optimizer);
    net.emplace(c.network, std::move(ckpt.params));
    if (fs::exists(log_path)) log_text = truncate_log(read_text(log_path), start);
  } else {
    net.emplace(c.network, derive_seed(c.seed, "network"));
    state = make_adam_state(net->params());
  }

  BatchSampler sampler(data.train, geometry, derive_seed(c.seed, "batches"));
  sampler.set_position(static_cast<std::uint64_t>(start) * static_cast<std::uint64_t>(c.train.batch_size));
  std::vector<TrainingExample> val_examples;
  if (!data.val.empty()) {
    val_examples = BatchSampler(data.val, geometry, derive_seed(c.seed, "validation")).fixed(c.train.val_segments);
  }
  const auto echo = to_json_text(c);
  auto save = [&](std::int64_t iteration) {
    write_checkpoint(global.out, Checkpoint{c.network, echo, iteration, net->params(), state});
  };

  auto diverged = [&](std::int64_t it, const std::string& why) {
    const auto kept = fs::exists(global.out) ? read_checkpoint(global.out).iteration : std::int64_t{-1};
    const std::string where = kept >= 0 ? "last finite checkpoint (iteration " + std::to_string(kept) + ") kept at " +
                                              global.out.string()
                                        : "no checkpoint was written";
    fail(ErrorKind::training_divergence, "diverged at iteration " + std::to_string(it) + ": " + why + "; " + where);
  };

  write_bytes(log_path, log_text);
  double running = 0.0;
  int since_log = 0;
  for (std::int64_t it = start + 1; it <= c.train.iterations; ++it) {
    const auto batch = sampler.next(c.train.batch_size);
    try {
      running += train_step(*net, batch, state, c.loss, c.optimizer).loss;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::training_divergence) throw;
      diverged(it, e.what());
    }
    ++since_log;
    if (it % c.train.val_interval == 0 || it == c.train.iterations) {
      std::optional<double> val;
      if (!val_examples.empty()) val = evaluate_loss(*net, val_examples, c.loss);
      if (val && !std::isfinite(*val)) diverged(it, "non-finite validation loss");
      save(it);
      log_text += format_loss_row(it, running / since_log, val);
      write_bytes(log_path, log_text);
      std::printf("iteration %" PRId64 "  train %.5f  val %s\n", it, running / since_log,
                  val ? std::to_string(*val).c_str() : "-");
      std::fflush(stdout);
      running = 0.0;
      since_log = 0;
    }
  }
  if (start >= c.train.iterations) save(start);
  return 0;
}

int run_support(const GlobalOptions& global, const SupportOptions& options) {
  require_out(global, "support");
  const auto config = load_config(global);
  const auto mode = options.mode.value_or(config.support.mode);
  const auto names = class_list(config, options);
  const auto provider = make_provider(config);

  SupportSet support;
  if (mode == "zero") {
    support = build_support_zero(names, *provider, config.embedding.prompt_template);
  } else if (mode == "few") {
    std::vector<std::vector<AudioClip>> shots(names.size());
    std::vector<AudioClip> background;
    if (options.clips) {
      read_clip_list(*options.clips, names, shots, background);
    } else if (config.embedding.provider == "stub") {
      synthesize_shots(config, options.shots.value_or(config.support.shots), shots, background);
    } else {
      fail(ErrorKind::usage, "few mode with a table provider needs --clips");
    }
    std::string missing;
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (shots[c].empty()) missing += (missing.empty() ? "" : ", ") + names[c];
    }
    if (!missing.empty()) fail(ErrorKind::invalid_input, "no support clips for class(es): " + missing);
    support = build_support_few(names, shots, background, *provider);
  } else {
    fail(ErrorKind::usage, "support mode must be zero or few, got '" + mode + "'");
  }
  support.provenance.seed = config.seed;
  support.validate();
  write_support(global.out, support);
  std::printf("wrote %d class embeddings + noise (%s mode, dim %d) to %s\n", support.num_classes(), mode.c_str(),
              support.dim(), global.out.string().c_str());
  return 0;
}

int run_infer(const GlobalOptions& global, const InferOptions& options) {
  require_out(global, "infer");
  const auto ckpt = read_checkpoint(options.checkpoint);
  auto config = load_config(global, ckpt.run_config);
  if (options.clap_override) config.decoder.use_clap_combination = *options.clap_override;
  const auto support = read_support(options.support);
  if (support.dim() != ckpt.network.embed_dim) {
    fail(ErrorKind::compatibility, "checkpoint embeds into " + std::to_string(ckpt.network.embed_dim) +
                                       " dimensions but the support set has " + std::to_string(support.dim()));
  }
  if (ckpt.network.input_bins != config.features.bins()) {
    fail(ErrorKind::compatibility, "checkpoint expects " + std::to_string(ckpt.network.input_bins) +
                                       " frequency bins but the feature configuration gives " +
                                       std::to_string(config.features.bins()));
  }
  auto wave = read_wav(options.audio);
  if (wave.num_channels() != 4) {
    fail(ErrorKind::invalid_input, options.audio.string() + " has " + std::to_string(wave.num_channels()) +
                                       " channels; FOA input needs 4");
  }
  if (wave.sample_rate != config.features.sample_rate) {
    fail(ErrorKind::compatibility, options.audio.string() + " is sampled at " + std::to_string(wave.sample_rate) +
                                       " Hz; the model expects " + std::to_string(config.features.sample_rate));
  }
  const int n_label_frames =
      label_frame_count(static_cast<double>(wave.num_samples()) / wave.sample_rate);
  const SegmentGeometry geometry{config.features, ckpt.network.time_pooling()};
  const WaveAudio audio(std::move(wave));
  const EmbedAccdoaNet<float> net(ckpt.network, ckpt.params);
  const auto outputs = predict(net, audio, geometry, n_label_frames);

  std::vector<Embedding> segment_embeddings;
  if (config.decoder.use_clap_combination) {
    const int count = static_cast<int>(outputs.segments.size());
    if (options.embeddings) {
      const auto table = read_embedding_table(*options.embeddings, support.dim());
      for (int k = 0; k < count; ++k) {
        const auto it = table.find(segment_key(k));
        if (it == table.end()) {
          fail(ErrorKind::invalid_input, options.embeddings->string() + " has no entry for " + segment_key(k));
        }
        segment_embeddings.push_back(it->second);
      }
    } else {
      const auto provider = make_provider(config);
      if (provider->dim() != support.dim()) {
        fail(ErrorKind::compatibility, "embedding provider dimension differs from the support set");
      }
      for (int k = 0; k < count; ++k) {
        AudioClip clip;
        clip.key = segment_key(k);
        clip.samples = audio.render(geometry.segment_start_sample(k), geometry.segment_samples()).channels.front();
        segment_embeddings.push_back(provider->audio_embed(clip));
      }
    }
  }
  const auto frames = decode_scene(outputs, support, config.decoder, segment_embeddings);
  const auto records = detection_records(frames);
  write_annotation_csv(global.out, records);
  std::printf("wrote %zu detections over %d label frames to %s\n", records.size(), n_label_frames,
              global.out.string().c_str());
  return 0;
}

int run_evaluate(const GlobalOptions& global, const EvaluateOptions& options) {
  const auto config = load_config(global);
  const auto preds = read_annotation_csv(options.predictions);
  const auto refs = read_annotation_csv(options.references);
  const auto report = evaluate(refs, preds, config.metrics);
  std::fputs(format_report(report).c_str(), stdout);
  const auto kv = format_report_kv(report);
  if (global.out.empty()) {
    std::fputs(kv.c_str(), stdout);
  } else {
    write_bytes(global.out, kv);
  }
  return 0;
}

}  // namespace seld::cli
