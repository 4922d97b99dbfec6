#include "seld/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seld/error.hpp"

namespace seld {
namespace {

using json = nlohmann::json;

/// Reads the fields of one JSON object and rejects any it was not asked for.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorKind::parse, where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_integer() && !it->is_number_unsigned()) throw std::invalid_argument("expected >= 0");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw std::invalid_argument("expected a number");
      }
      out = it->get<T>();
    } catch (const std::exception& e) {
      fail(ErrorKind::parse, where() + "." + key + ": " + e.what());
    }
  }

  template <typename F>
  void object(const char* key, F&& read) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    StrictObject sub(*it, path_ + "." + key);
    read(sub);
    sub.finish();
  }

  void finish() const {
    std::string unknown;
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.contains(k)) unknown += (unknown.empty() ? "" : ", ") + k;
    }
    if (!unknown.empty()) fail(ErrorKind::parse, "unknown key(s) in " + where() + ": " + unknown);
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

json to_json(const NetworkConfig& c) {
  return {{"input_channels", c.input_channels}, {"input_bins", c.input_bins},
          {"n_tracks", c.n_tracks},             {"embed_dim", c.embed_dim},
          {"conv_channels", c.conv_channels},   {"time_pool", c.time_pool},
          {"freq_pool", c.freq_pool},           {"attention_blocks", c.attention_blocks},
          {"attention_heads", c.attention_heads}, {"cross_stitch", c.cross_stitch}};
}

void read(StrictObject& o, NetworkConfig& c) {
  o.get("input_channels", c.input_channels);
  o.get("input_bins", c.input_bins);
  o.get("n_tracks", c.n_tracks);
  o.get("embed_dim", c.embed_dim);
  o.get("conv_channels", c.conv_channels);
  o.get("time_pool", c.time_pool);
  o.get("freq_pool", c.freq_pool);
  o.get("attention_blocks", c.attention_blocks);
  o.get("attention_heads", c.attention_heads);
  o.get("cross_stitch", c.cross_stitch);
}

json to_json(const FeatureConfig& c) {
  return {{"sample_rate", c.sample_rate}, {"frame_len", c.frame_len},       {"hop", c.hop},
          {"fft_size", c.fft_size},       {"seg_frames", c.seg_frames},     {"shift_frames", c.shift_frames},
          {"amplitude_scale", c.amplitude_scale}};
}

void read(StrictObject& o, FeatureConfig& c) {
  o.get("sample_rate", c.sample_rate);
  o.get("frame_len", c.frame_len);
  o.get("hop", c.hop);
  o.get("fft_size", c.fft_size);
  o.get("seg_frames", c.seg_frames);
  o.get("shift_frames", c.shift_frames);
  o.get("amplitude_scale", c.amplitude_scale);
}

json to_json(const SceneGenConfig& c) {
  return {{"scene_seconds", c.scene_seconds}, {"sample_rate", c.sample_rate},
          {"n_classes", c.n_classes},         {"max_polyphony", c.max_polyphony},
          {"min_event", c.min_event},         {"max_event", c.max_event},
          {"min_gap", c.min_gap},             {"max_gap", c.max_gap},
          {"min_gain", c.min_gain},           {"max_gain", c.max_gain},
          {"min_elevation", c.min_elevation}, {"max_elevation", c.max_elevation},
          {"noise_level", c.noise_level},     {"distinct_overlap_classes", c.distinct_overlap_classes}};
}

void read(StrictObject& o, SceneGenConfig& c) {
  o.get("scene_seconds", c.scene_seconds);
  o.get("sample_rate", c.sample_rate);
  o.get("n_classes", c.n_classes);
  o.get("max_polyphony", c.max_polyphony);
  o.get("min_event", c.min_event);
  o.get("max_event", c.max_event);
  o.get("min_gap", c.min_gap);
  o.get("max_gap", c.max_gap);
  o.get("min_gain", c.min_gain);
  o.get("max_gain", c.max_gain);
  o.get("min_elevation", c.min_elevation);
  o.get("max_elevation", c.max_elevation);
  o.get("noise_level", c.noise_level);
  o.get("distinct_overlap_classes", c.distinct_overlap_classes);
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["features"] = to_json(c.features);
  j["network"] = to_json(c.network);
  j["loss"] = {{"beta_embed", c.loss.beta_embed}, {"beta_accdoa", c.loss.beta_accdoa}, {"n_tracks", c.loss.n_tracks}};
  const auto& op = c.optimizer;
  j["optimizer"] = {{"peak_lr", op.peak_lr},           {"warmup_iterations", op.warmup_iterations},
                    {"decay_factor", op.decay_factor}, {"decay_interval", op.decay_interval},
                    {"beta1", op.beta1},               {"beta2", op.beta2},
                    {"epsilon", op.epsilon},           {"weight_decay", op.weight_decay}};
  j["train"] = {{"iterations", c.train.iterations},
                {"batch_size", c.train.batch_size},
                {"val_interval", c.train.val_interval},
                {"val_segments", c.train.val_segments}};
  j["simulation"] = {{"n_scenes", c.simulation.n_scenes},
                     {"n_validation_scenes", c.simulation.n_validation_scenes},
                     {"scene", to_json(c.simulation.scene)}};
  const auto& e = c.embedding;
  j["embedding"] = {{"provider", e.provider},
                    {"dim", e.dim},
                    {"orthogonalize", e.orthogonalize},
                    {"audio_noise_level", e.audio_noise_level},
                    {"class_names", e.class_names},
                    {"prompt_template", e.prompt_template},
                    {"table_path", e.table_path}};
  j["support"] = {{"mode", c.support.mode}, {"shots", c.support.shots}};
  const auto& d = c.decoder;
  j["decoder"] = {{"sigma_a", d.sigma_a},
                  {"sigma_b", d.sigma_b},
                  {"use_noise_rejection", d.use_noise_rejection},
                  {"use_clap_combination", d.use_clap_combination}};
  j["metrics"] = {{"doa_threshold", c.metrics.doa_threshold}, {"segment_frames", c.metrics.segment_frames}};
  return j;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      problems.emplace_back(e.what());
    }
  };
  collect([&] { network.validate(); });
  collect([&] { optimizer.validate(); });
  collect([&] { decoder.validate(); });
  collect([&] { metrics.validate(); });
  check(features.sample_rate > 0, "features.sample_rate must be > 0");
  check(features.hop > 0 && features.frame_len >= features.hop, "features: need frame_len >= hop > 0");
  check(features.fft_size >= features.frame_len, "features.fft_size must be >= frame_len");
  check(features.seg_frames >= 1 && features.shift_frames >= 1, "features: segment and shift must be >= 1");
  check(network.input_channels == kFeatureChannels, "network.input_channels must be 7");
  check(network.input_bins == features.bins(), "network.input_bins must equal features.fft_size / 2 + 1");
  check(network.embed_dim == embedding.dim, "network.embed_dim must equal embedding.dim");
  check(loss.n_tracks == network.n_tracks, "loss.n_tracks must equal network.n_tracks");
  check(loss.beta_embed >= 0.0 && loss.beta_accdoa >= 0.0, "loss coefficients must be >= 0");
  check(train.iterations >= 0, "train.iterations must be >= 0");
  check(train.batch_size >= 1, "train.batch_size must be >= 1");
  check(train.val_interval >= 1, "train.val_interval must be >= 1");
  check(train.val_segments >= 0, "train.val_segments must be >= 0");
  const auto& sc = simulation.scene;
  check(simulation.n_scenes >= 1, "simulation.n_scenes must be >= 1");
  check(simulation.n_validation_scenes >= 0, "simulation.n_validation_scenes must be >= 0");
  check(sc.sample_rate == features.sample_rate, "simulation.scene.sample_rate must equal features.sample_rate");
  check(sc.max_polyphony >= 1 && sc.max_polyphony <= network.n_tracks,
        "simulation.scene.max_polyphony must be within [1, network.n_tracks]");
  check(sc.scene_seconds > 0.0, "simulation.scene.scene_seconds must be > 0");
  check(embedding.provider == "stub" || embedding.provider == "table", "embedding.provider must be stub or table");
  check(embedding.provider != "table" || !embedding.table_path.empty(), "embedding.table_path is required");
  check(!embedding.class_names.empty(), "embedding.class_names must not be empty");
  check(static_cast<int>(embedding.class_names.size()) == sc.n_classes,
        "embedding.class_names must list simulation.scene.n_classes names");
  check(support.mode == "zero" || support.mode == "few", "support.mode must be zero or few");
  check(support.shots >= 1, "support.shots must be >= 1");
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    fail(ErrorKind::configuration, msg);
  }
}

std::string to_json_text(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

RunConfig parse_run_config(std::string_view json_text) {
  const json j = parse_json(json_text);
  RunConfig c;
  StrictObject root(j, "");
  root.get("seed", c.seed);
  root.object("features", [&](StrictObject& o) { read(o, c.features); });
  root.object("network", [&](StrictObject& o) { read(o, c.network); });
  root.object("loss", [&](StrictObject& o) {
    o.get("beta_embed", c.loss.beta_embed);
    o.get("beta_accdoa", c.loss.beta_accdoa);
    o.get("n_tracks", c.loss.n_tracks);
  });
  root.object("optimizer", [&](StrictObject& o) {
    auto& op = c.optimizer;
    o.get("peak_lr", op.peak_lr);
    o.get("warmup_iterations", op.warmup_iterations);
    o.get("decay_factor", op.decay_factor);
    o.get("decay_interval", op.decay_interval);
    o.get("beta1", op.beta1);
    o.get("beta2", op.beta2);
    o.get("epsilon", op.epsilon);
    o.get("weight_decay", op.weight_decay);
  });
  root.object("train", [&](StrictObject& o) {
    o.get("iterations", c.train.iterations);
    o.get("batch_size", c.train.batch_size);
    o.get("val_interval", c.train.val_interval);
    o.get("val_segments", c.train.val_segments);
  });
  root.object("simulation", [&](StrictObject& o) {
    o.get("n_scenes", c.simulation.n_scenes);
    o.get("n_validation_scenes", c.simulation.n_validation_scenes);
    o.object("scene", [&](StrictObject& s) { read(s, c.simulation.scene); });
  });
  root.object("embedding", [&](StrictObject& o) {
    auto& e = c.embedding;
    o.get("provider", e.provider);
    o.get("dim", e.dim);
    o.get("orthogonalize", e.orthogonalize);
    o.get("audio_noise_level", e.audio_noise_level);
    o.get("class_names", e.class_names);
    o.get("prompt_template", e.prompt_template);
    o.get("table_path", e.table_path);
  });
  root.object("support", [&](StrictObject& o) {
    o.get("mode", c.support.mode);
    o.get("shots", c.support.shots);
  });
  root.object("decoder", [&](StrictObject& o) {
    auto& d = c.decoder;
    o.get("sigma_a", d.sigma_a);
    o.get("sigma_b", d.sigma_b);
    o.get("use_noise_rejection", d.use_noise_rejection);
    o.get("use_clap_combination", d.use_clap_combination);
  });
  root.object("metrics", [&](StrictObject& o) {
    o.get("doa_threshold", c.metrics.doa_threshold);
    o.get("segment_frames", c.metrics.segment_frames);
  });
  root.finish();
  return c;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_json_text(const NetworkConfig& config) { return to_json(config).dump(); }

NetworkConfig parse_network_config(std::string_view json_text) {
  const json j = parse_json(json_text);
  NetworkConfig c;
  StrictObject o(j, "network");
  read(o, c);
  o.finish();
  return c;
}

}  // namespace seld
