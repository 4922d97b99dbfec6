#include "seld/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seld/error.hpp"
#include "seld/random.hpp"

namespace seld {

double dot(std::span<const float> a, std::span<const float> b) noexcept {
  double s = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    s += static_cast<double>(a[i]) * b[i];
  }
  return s;
}

double norm(std::span<const float> v) noexcept { return std::sqrt(dot(v, v)); }

double cosine(std::span<const float> a, std::span<const float> b) noexcept {
  return dot(a, b) / std::max(norm(a) * norm(b), 1e-8);
}

Embedding normalized(std::span<const float> v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    fail(ErrorKind::invalid_input, "cannot normalize a zero or non-finite embedding");
  }
  Embedding out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(v[i] / n);
  }
  return out;
}

Embedding prototype(std::span<const Embedding> members) {
  if (members.empty()) {
    fail(ErrorKind::invalid_input, "prototype of an empty embedding list");
  }
  const std::size_t d = members.front().size();
  std::vector<double> sum(d, 0.0);
  for (const auto& e : members) {
    if (e.size() != d) {
      fail(ErrorKind::shape, "prototype members have different dimensions");
    }
    for (std::size_t i = 0; i < d; ++i) {
      sum[i] += e[i];
    }
  }
  double n = 0.0;
  for (double s : sum) {
    n += s * s;
  }
  n = std::sqrt(n);
  if (!(n > 0.0)) {
    fail(ErrorKind::invalid_input, "prototype members cancel to a zero vector");
  }
  Embedding out(d);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = static_cast<float>(sum[i] / n);
  }
  return out;
}

std::optional<SynthTag> parse_synth_key(std::string_view key) {
  constexpr std::string_view prefix = "synth:";
  if (!key.starts_with(prefix)) {
    return std::nullopt;
  }
  key.remove_prefix(prefix.size());
  const auto colon = key.find(':');
  if (colon == std::string_view::npos) {
    return std::nullopt;
  }
  const auto cls = key.substr(0, colon);
  const auto seed = key.substr(colon + 1);
  SynthTag tag;
  if (cls == "bg") {
    tag.class_id = kBackgroundClass;
  } else {
    auto [p, ec] = std::from_chars(cls.data(), cls.data() + cls.size(), tag.class_id);
    if (ec != std::errc() || p != cls.data() + cls.size() || tag.class_id < 0) {
      return std::nullopt;
    }
  }
  auto [p, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), tag.variation_seed);
  if (ec != std::errc() || p != seed.data() + seed.size()) {
    return std::nullopt;
  }
  return tag;
}

std::string synth_key(const SynthTag& tag) {
  return "synth:" + (tag.class_id == kBackgroundClass ? std::string("bg") : std::to_string(tag.class_id)) + ":" +
         std::to_string(tag.variation_seed);
}

Embedding stub_text_embed(std::string_view text, std::uint64_t seed, int dim) {
  if (text.empty()) {
    fail(ErrorKind::invalid_input, "stub text encoder needs a non-empty text");
  }
  if (dim < 1) {
    fail(ErrorKind::configuration, "embedding dimension must be positive");
  }
  const std::uint64_t key = derive_seed(seed, "stub-text", fnv1a64(text));
  std::vector<float> g(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    g[static_cast<std::size_t>(i)] = static_cast<float>(counter_gaussian(key, static_cast<std::uint64_t>(i)));
  }
  return normalized(g);
}

Embedding perturb_embedding(std::span<const float> anchor, std::uint64_t variation_seed, double noise_level,
                            std::uint64_t salt) {
  if (noise_level < 0.0) {
    fail(ErrorKind::invalid_input, "noise level must be non-negative");
  }
  if (noise_level == 0.0) {
    return Embedding(anchor.begin(), anchor.end());
  }
  const std::uint64_t key = derive_seed(variation_seed, "stub-audio", salt);
  const double sigma = noise_level / std::sqrt(static_cast<double>(anchor.size()));
  std::vector<float> v(anchor.size());
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    v[i] = static_cast<float>(anchor[i] + sigma * counter_gaussian(key, i));
  }
  return normalized(v);
}

StubEmbeddingProvider::StubEmbeddingProvider(StubOptions options) : options_(std::move(options)) {
  const int d = options_.dim;
  std::set<std::string, std::less<>> seen;
  for (const auto& name : options_.class_names) {
    if (!seen.insert(name).second) {
      fail(ErrorKind::invalid_input, "duplicate class name '" + name + "'");
    }
    anchors_.push_back(stub_text_embed(name, options_.seed, d));
  }
  if (options_.orthogonalize) {
    if (anchors_.size() > static_cast<std::size_t>(d)) {
      fail(ErrorKind::configuration, "cannot orthogonalize more anchors than dimensions");
    }
    // Modified Gram-Schmidt in double precision.
    std::vector<std::vector<double>> basis;
    for (auto& a : anchors_) {
      std::vector<double> v(a.begin(), a.end());
      for (const auto& b : basis) {
        double p = 0.0;
        for (int i = 0; i < d; ++i) p += v[i] * b[i];
        for (int i = 0; i < d; ++i) v[i] -= p * b[i];
      }
      double n = 0.0;
      for (double x : v) n += x * x;
      n = std::sqrt(n);
      for (auto& x : v) x /= n;
      for (int i = 0; i < d; ++i) a[i] = static_cast<float>(v[i]);
      basis.push_back(std::move(v));
    }
  }
  background_ = stub_text_embed(options_.background_text, options_.seed, d);
}

const Embedding& StubEmbeddingProvider::anchor(int class_id) const {
  if (class_id == kBackgroundClass) {
    return background_;
  }
  if (class_id < 0 || class_id >= static_cast<int>(anchors_.size())) {
    fail(ErrorKind::range, "class id " + std::to_string(class_id) + " outside [0, " +
                               std::to_string(anchors_.size()) + ")");
  }
  return anchors_[static_cast<std::size_t>(class_id)];
}

Embedding StubEmbeddingProvider::text_embed(std::string_view text) const {
  const auto& names = options_.class_names;
  if (auto it = std::find(names.begin(), names.end(), text); it != names.end()) {
    return anchors_[static_cast<std::size_t>(it - names.begin())];
  }
  return stub_text_embed(text, options_.seed, options_.dim);
}

Embedding StubEmbeddingProvider::audio_embed_class(int class_id, std::uint64_t variation_seed,
                                                   double noise_level) const {
  const auto salt = static_cast<std::uint64_t>(static_cast<std::int64_t>(class_id) + 1);
  return perturb_embedding(anchor(class_id), variation_seed, noise_level, salt);
}

Embedding StubEmbeddingProvider::audio_embed(const AudioClip& clip) const {
  auto tag = clip.tag;
  if (!tag) {
    tag = parse_synth_key(clip.key);
  }
  if (tag) {
    return audio_embed_class(tag->class_id, tag->variation_seed, options_.audio_noise_level);
  }
  if (clip.samples.empty()) {
    fail(ErrorKind::provider, "stub audio encoder got an untagged empty clip '" + clip.key + "'");
  }
  const std::string_view bytes(reinterpret_cast<const char*>(clip.samples.data()),
                               clip.samples.size() * sizeof(float));
  return stub_text_embed("audio#" + std::to_string(fnv1a64(bytes)), options_.seed, options_.dim);
}

EmbeddingTable parse_embedding_table(std::string_view text, int expected_dim) {
  EmbeddingTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      fail(ErrorKind::parse, "embedding table line " + std::to_string(line_no) + ": expected '<key>\\t<values>'");
    }
    std::string key(line.substr(0, tab));
    Embedding values;
    values.reserve(static_cast<std::size_t>(expected_dim));
    std::istringstream in{std::string(line.substr(tab + 1))};
    in.imbue(std::locale::classic());
    float v = 0.0f;
    while (in >> v) values.push_back(v);
    if (!in.eof()) {
      fail(ErrorKind::parse, "embedding table line " + std::to_string(line_no) + ": malformed number");
    }
    if (static_cast<int>(values.size()) != expected_dim) {
      fail(ErrorKind::parse, "embedding table line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(expected_dim) + " values, got " + std::to_string(values.size()));
    }
    if (!table.emplace(std::move(key), std::move(values)).second) {
      fail(ErrorKind::parse, "embedding table line " + std::to_string(line_no) + ": duplicate key");
    }
  }
  return table;
}

EmbeddingTable read_embedding_table(const std::filesystem::path& path, int expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorKind::io, "cannot open embedding table " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_embedding_table(ss.str(), expected_dim);
}

std::string format_embedding_table(const EmbeddingTable& table) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (const auto& [key, values] : table) {
    if (key.find_first_of("\t\n\r") != std::string::npos) {
      fail(ErrorKind::invalid_input, "embedding key contains a tab or newline");
    }
    os << key << '\t';
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) os << ' ';
      os << values[i];
    }
    os << '\n';
  }
  return os.str();
}

void write_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorKind::io, "cannot write embedding table " + path.string());
  }
  out << format_embedding_table(table);
}

TableEmbeddingProvider::TableEmbeddingProvider(EmbeddingTable table, int dim) : table_(std::move(table)), dim_(dim) {
  for (const auto& [key, v] : table_) {
    if (static_cast<int>(v.size()) != dim_) {
      fail(ErrorKind::shape, "embedding '" + key + "' has the wrong dimension");
    }
  }
}

Embedding TableEmbeddingProvider::lookup(std::string_view key) const {
  auto it = table_.find(key);
  if (it == table_.end()) {
    fail(ErrorKind::provider, "no precomputed embedding for '" + std::string(key) + "'");
  }
  return normalized(it->second);
}

Embedding TableEmbeddingProvider::text_embed(std::string_view text) const { return lookup(text); }
Embedding TableEmbeddingProvider::audio_embed(const AudioClip& clip) const { return lookup(clip.key); }

void SupportSet::validate() const {
  if (class_names.empty()) {
    fail(ErrorKind::invalid_input, "support set needs at least one class");
  }
  if (class_embeddings.size() != class_names.size()) {
    fail(ErrorKind::shape, "support set has mismatched class and embedding counts");
  }
  std::set<std::string, std::less<>> seen;
  for (const auto& name : class_names) {
    if (!seen.insert(name).second) {
      fail(ErrorKind::invalid_input, "duplicate support class '" + name + "'");
    }
  }
  const auto d = noise_embedding.size();
  auto check = [&](const Embedding& e, const std::string& what) {
    if (e.size() != d || d == 0) {
      fail(ErrorKind::shape, "support embedding for " + what + " has the wrong dimension");
    }
    if (std::abs(norm(e) - 1.0) > 1e-4) {
      fail(ErrorKind::invalid_input, "support embedding for " + what + " is not unit norm");
    }
  };
  check(noise_embedding, "noise");
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    check(class_embeddings[c], "'" + class_names[c] + "'");
  }
}

std::string apply_prompt(std::string_view prompt_template, std::string_view class_name) {
  std::string out(prompt_template);
  if (const auto at = out.find("{}"); at != std::string::npos) {
    out.replace(at, 2, class_name);
  }
  return out;
}

SupportSet build_support_zero(std::span<const std::string> class_names, const EmbeddingProvider& provider,
                              std::string_view prompt_template) {
  SupportSet s;
  s.class_names.assign(class_names.begin(), class_names.end());
  for (const auto& name : class_names) {
    s.class_embeddings.push_back(provider.text_embed(apply_prompt(prompt_template, name)));
  }
  s.noise_embedding = provider.text_embed("silent");
  s.provenance = {"zero", 0, "text", 0};
  s.validate();
  return s;
}

SupportSet build_support_few(std::span<const std::string> class_names,
                             std::span<const std::vector<AudioClip>> class_shots,
                             std::span<const AudioClip> background_clips, const EmbeddingProvider& provider) {
  if (class_shots.size() != class_names.size()) {
    fail(ErrorKind::invalid_input, "few-shot support needs one shot list per class");
  }
  std::string missing;
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    if (class_shots[c].empty()) {
      missing += (missing.empty() ? "" : ", ") + class_names[c];
    }
  }
  if (!missing.empty()) {
    fail(ErrorKind::invalid_input, "no support shots for class(es): " + missing);
  }
  SupportSet s;
  s.class_names.assign(class_names.begin(), class_names.end());
  int min_k = std::numeric_limits<int>::max();
  for (const auto& shots : class_shots) {
    std::vector<Embedding> embs;
    embs.reserve(shots.size());
    for (const auto& clip : shots) {
      embs.push_back(provider.audio_embed(clip));
    }
    s.class_embeddings.push_back(prototype(embs));
    min_k = std::min(min_k, static_cast<int>(shots.size()));
  }
  if (background_clips.empty()) {
    s.noise_embedding = provider.text_embed("silent");
    s.provenance.noise_source = "text";
  } else {
    std::vector<Embedding> embs;
    for (const auto& clip : background_clips) {
      embs.push_back(provider.audio_embed(clip));
    }
    s.noise_embedding = prototype(embs);
    s.provenance.noise_source = "audio";
  }
  s.provenance.mode = "few";
  s.provenance.shots = class_names.empty() ? 0 : min_k;
  s.validate();
  return s;
}

std::string support_to_json(const SupportSet& support) {
  nlohmann::json j;
  j["format"] = "seld-support";
  j["version"] = 1;
  j["provenance"] = {{"mode", support.provenance.mode},
                     {"shots", support.provenance.shots},
                     {"noise_source", support.provenance.noise_source},
                     {"seed", support.provenance.seed}};
  auto classes = nlohmann::json::array();
  for (std::size_t c = 0; c < support.class_names.size(); ++c) {
    classes.push_back({{"name", support.class_names[c]}, {"embedding", support.class_embeddings[c]}});
  }
  j["classes"] = std::move(classes);
  j["noise"] = support.noise_embedding;
  return j.dump(1);
}

SupportSet support_from_json(std::string_view text) {
  SupportSet s;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "seld-support" || j.at("version") != 1) {
      fail(ErrorKind::format, "not a version-1 support file");
    }
    const auto& p = j.at("provenance");
    s.provenance = {p.at("mode").get<std::string>(), p.at("shots").get<int>(),
                    p.at("noise_source").get<std::string>(), p.at("seed").get<std::uint64_t>()};
    for (const auto& c : j.at("classes")) {
      s.class_names.push_back(c.at("name").get<std::string>());
      s.class_embeddings.push_back(c.at("embedding").get<Embedding>());
    }
    s.noise_embedding = j.at("noise").get<Embedding>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("support file: ") + e.what());
  }
  s.validate();
  return s;
}

void write_support(const std::filesystem::path& path, const SupportSet& support) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorKind::io, "cannot write support file " + path.string());
  }
  out << support_to_json(support) << '\n';
}

SupportSet read_support(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorKind::io, "cannot open support file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return support_from_json(ss.str());
}

}  // namespace seld
