#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "seld/embedding.hpp"
#include "seld/error.hpp"
#include "seld/random.hpp"

using namespace seld;

namespace {

StubEmbeddingProvider make_stub(bool orthogonalize = false) {
  StubOptions o;
  o.seed = 11;
  o.class_names = {"alarm", "footsteps", "speech", "water"};
  o.orthogonalize = orthogonalize;
  return StubEmbeddingProvider(o);
}

Embedding axis(int dim, int i) {
  Embedding e(static_cast<std::size_t>(dim), 0.0f);
  e[static_cast<std::size_t>(i)] = 1.0f;
  return e;
}

}  // namespace

TEST_CASE("stub text embeddings are deterministic unit vectors") {
  const auto a = stub_text_embed("speech", 1);
  CHECK(a.size() == 512);
  CHECK(norm(a) == Approx(1.0));
  CHECK(stub_text_embed("speech", 1) == a);
  CHECK(stub_text_embed("speech", 2) != a);
  CHECK_THROWS_AS(stub_text_embed("", 1), Error);
}

TEST_CASE("distinct names are nearly orthogonal at D=512") {
  std::vector<double> c;
  for (int i = 0; i < 1000; ++i) {
    c.push_back(std::abs(cosine(stub_text_embed("a" + std::to_string(i), 5), stub_text_embed("b" + std::to_string(i), 5))));
  }
  std::sort(c.begin(), c.end());
  CHECK(c[989] < 0.5);
}

TEST_CASE("class-conditioned audio embeddings stay near their anchor") {
  const auto stub = make_stub();
  CHECK(stub.audio_embed_class(2, 99, 0.0) == stub.anchor(2));
  int close = 0, own = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto e = stub.audio_embed_class(0, s, 0.1);
    if (cosine(e, stub.anchor(0)) > 0.9) ++close;
    if (cosine(e, stub.anchor(0)) > cosine(e, stub.anchor(1))) ++own;
  }
  CHECK(close >= 990);
  CHECK(own >= 990);
  CHECK_THROWS_AS(stub.audio_embed_class(4, 0, 0.1), Error);
  CHECK_THROWS_AS(stub.audio_embed_class(-2, 0, 0.1), Error);
}

TEST_CASE("orthogonalised anchors are orthonormal") {
  const auto stub = make_stub(true);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(dot(stub.anchor(i), stub.anchor(j)) == Approx(i == j ? 1.0 : 0.0).margin(1e-6));
  }
}

TEST_CASE("tagged clips route through the class anchors") {
  const auto stub = make_stub();
  AudioClip clip;
  clip.tag = SynthTag{1, 42};
  const auto e = stub.audio_embed(clip);
  CHECK(e == stub.audio_embed_class(1, 42, 0.1));
  const auto key = synth_key(SynthTag{kBackgroundClass, 7});
  const auto parsed = parse_synth_key(key);
  REQUIRE(parsed);
  CHECK(parsed->class_id == kBackgroundClass);
  CHECK(parsed->variation_seed == 7);
  CHECK_FALSE(parse_synth_key("synth:x"));
}

TEST_CASE("vector helpers") {
  const Embedding a{3, 4}, z{0, 0};
  CHECK(norm(a) == Approx(5.0));
  CHECK(cosine(a, z) == 0.0);
  CHECK(normalized(a)[0] == Approx(0.6));
  CHECK_THROWS_AS(normalized(z), Error);
  const std::vector<Embedding> members{axis(4, 0), axis(4, 1)};
  const auto p = prototype(members);
  CHECK(p[0] == Approx(std::sqrt(0.5)));
  CHECK(p[1] == Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(prototype(std::vector<Embedding>{}), Error);
}

TEST_CASE("zero-shot supports") {
  const auto stub = make_stub();
  const std::vector<std::string> one{"alarm"};
  const auto s1 = build_support_zero(one, stub);
  CHECK(s1.num_classes() == 1);
  CHECK(s1.noise_embedding == stub.text_embed("silent"));
  const std::vector<std::string> names{"alarm", "footsteps", "speech", "water"};
  const auto s = build_support_zero(names, stub, "the sound of {}");
  s.validate();
  CHECK(s.class_embeddings[2] == stub.text_embed("the sound of speech"));
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) CHECK(s.class_embeddings[i] != s.class_embeddings[j]);
  }
  CHECK(apply_prompt("a {} sound", "dog") == "a dog sound");
}

TEST_CASE("few-shot prototypes") {
  const auto stub = make_stub();
  const std::vector<std::string> names{"alarm", "footsteps"};
  AudioClip a, b;
  a.tag = SynthTag{0, 1};
  b.tag = SynthTag{1, 2};
  const std::vector<std::vector<AudioClip>> single{{a}, {b, b}};
  const auto s = build_support_few(names, single, {}, stub);
  CHECK(s.class_embeddings[0] == stub.audio_embed(a));
  for (std::size_t i = 0; i < 512; ++i) CHECK(s.class_embeddings[1][i] == Approx(stub.audio_embed(b)[i]).margin(1e-6));
  CHECK(s.provenance.noise_source == "text");

  const std::vector<std::vector<AudioClip>> missing{{a}, {}};
  try {
    build_support_few(names, missing, {}, stub);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
    CHECK(std::string(e.what()).find("footsteps") != std::string::npos);
  }
}

TEST_CASE("supports round-trip through JSON") {
  const auto stub = make_stub();
  const std::vector<std::string> names{"alarm", "speech"};
  const auto s = build_support_zero(names, stub);
  const auto back = support_from_json(support_to_json(s));
  CHECK(back.class_names == s.class_names);
  CHECK(back.class_embeddings == s.class_embeddings);
  CHECK(back.noise_embedding == s.noise_embedding);
  CHECK(back.provenance.mode == "zero");
}

TEST_CASE("table provider") {
  EmbeddingTable t;
  t["speech"] = axis(3, 0);
  t["clip-1"] = axis(3, 2);
  const auto text = format_embedding_table(t);
  const auto parsed = parse_embedding_table(text, 3);
  CHECK(parsed == t);
  TableEmbeddingProvider p(parsed, 3);
  CHECK(p.text_embed("speech") == axis(3, 0));
  AudioClip clip;
  clip.key = "clip-1";
  CHECK(p.audio_embed(clip) == axis(3, 2));
  clip.key = "nope";
  CHECK_THROWS_AS(p.audio_embed(clip), Error);
  CHECK_THROWS_AS(parse_embedding_table("k\t1 2\n", 3), Error);
}
