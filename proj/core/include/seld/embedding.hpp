#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seld {

inline constexpr int kDefaultEmbedDim = 512;

/// A point in the shared language-audio space. Unit norm, or all zeros for
/// inactive-track targets.
using Embedding = std::vector<float>;

double norm(std::span<const float> v) noexcept;
double dot(std::span<const float> a, std::span<const float> b) noexcept;
/// ε-guarded cosine similarity: a·b / max(‖a‖‖b‖, 1e-8).
double cosine(std::span<const float> a, std::span<const float> b) noexcept;
/// Returns v / ‖v‖; throws invalid_input for a zero vector.
Embedding normalized(std::span<const float> v);
/// Normalized arithmetic mean of a non-empty list (a prototype).
Embedding prototype(std::span<const Embedding> members);

/// Identifies audio produced by the synthetic generator so the stub encoder
/// can return a class-conditioned embedding for it.
struct SynthTag {
  int class_id = 0;  ///< kBackgroundClass for background-only audio
  std::uint64_t variation_seed = 0;
};

inline constexpr int kBackgroundClass = -1;

struct AudioClip {
  std::string key;             ///< lookup key for table-backed providers
  std::vector<float> samples;  ///< single channel; may be empty for keyed lookups
  std::optional<SynthTag> tag;
};

/// Parses "synth:<class>:<seed>" (class may be "bg") into a tag.
std::optional<SynthTag> parse_synth_key(std::string_view key);
std::string synth_key(const SynthTag& tag);

/// Language-audio encoder pair. Implementations must be deterministic, return
/// unit vectors, and be callable concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dim() const = 0;
  virtual Embedding text_embed(std::string_view text) const = 0;
  virtual Embedding audio_embed(const AudioClip& clip) const = 0;
};

/// Deterministic unit vector for a text: normalized Gaussian draw keyed by (text, seed).
Embedding stub_text_embed(std::string_view text, std::uint64_t seed, int dim = kDefaultEmbedDim);

/// normalize(anchor + noise_level · g), g ~ N(0, I/D) keyed by (variation_seed, salt).
/// noise_level is therefore the expected perturbation norm relative to the unit anchor.
Embedding perturb_embedding(std::span<const float> anchor, std::uint64_t variation_seed, double noise_level,
                            std::uint64_t salt = 0);

struct StubOptions {
  int dim = kDefaultEmbedDim;
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;
  /// Perturbation applied to tagged audio clips.
  double audio_noise_level = 0.1;
  /// Gram-Schmidt the class anchors (in class order) into an orthonormal set.
  bool orthogonalize = false;
  std::string background_text = "silent";
};

/// Stand-in for a pretrained encoder. Class anchors are text embeddings of the
/// class names; tagged audio maps to a perturbed anchor, untagged audio to a
/// content-hash embedding.
class StubEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit StubEmbeddingProvider(StubOptions options);

  int dim() const override { return options_.dim; }
  Embedding text_embed(std::string_view text) const override;
  Embedding audio_embed(const AudioClip& clip) const override;

  /// Class-conditioned embedding; throws range for an unknown class id.
  Embedding audio_embed_class(int class_id, std::uint64_t variation_seed, double noise_level) const;
  const Embedding& anchor(int class_id) const;
  const StubOptions& options() const noexcept { return options_; }

 private:
  StubOptions options_;
  std::vector<Embedding> anchors_;
  Embedding background_;
};

/// Text table `<key>\t<v1 v2 ... vD>`, one record per line, unique keys.
using EmbeddingTable = std::map<std::string, Embedding, std::less<>>;

EmbeddingTable parse_embedding_table(std::string_view text, int expected_dim = kDefaultEmbedDim);
EmbeddingTable read_embedding_table(const std::filesystem::path& path, int expected_dim = kDefaultEmbedDim);
std::string format_embedding_table(const EmbeddingTable& table);
void write_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table);

/// Looks up precomputed embeddings: text by the text itself, audio by clip key.
class TableEmbeddingProvider final : public EmbeddingProvider {
 public:
  TableEmbeddingProvider(EmbeddingTable table, int dim);

  int dim() const override { return dim_; }
  Embedding text_embed(std::string_view text) const override;
  Embedding audio_embed(const AudioClip& clip) const override;

 private:
  Embedding lookup(std::string_view key) const;
  EmbeddingTable table_;
  int dim_;
};

struct SupportProvenance {
  std::string mode;         ///< "zero" or "few"
  int shots = 0;            ///< K (few mode; minimum over classes)
  std::string noise_source; ///< "text" or "audio"
  std::uint64_t seed = 0;
};

struct SupportSet {
  std::vector<std::string> class_names;
  std::vector<Embedding> class_embeddings;
  Embedding noise_embedding;
  SupportProvenance provenance;

  int num_classes() const noexcept { return static_cast<int>(class_names.size()); }
  int dim() const noexcept { return noise_embedding.empty() ? 0 : static_cast<int>(noise_embedding.size()); }
  /// Checks C >= 1, unique names, matching dims and unit norms.
  void validate() const;
};

/// Expands `{}` in the template with the class name.
std::string apply_prompt(std::string_view prompt_template, std::string_view class_name);

/// Text supports: one prompt per class plus the "silent" noise prompt.
SupportSet build_support_zero(std::span<const std::string> class_names, const EmbeddingProvider& provider,
                              std::string_view prompt_template = "{}");

/// Prototype supports: normalized mean of K audio embeddings per class. The
/// noise support is the prototype of the background clips, or the "silent"
/// text embedding when none are given.
SupportSet build_support_few(std::span<const std::string> class_names,
                             std::span<const std::vector<AudioClip>> class_shots,
                             std::span<const AudioClip> background_clips, const EmbeddingProvider& provider);

std::string support_to_json(const SupportSet& support);
SupportSet support_from_json(std::string_view text);
void write_support(const std::filesystem::path& path, const SupportSet& support);
SupportSet read_support(const std::filesystem::path& path);

}  // namespace seld
