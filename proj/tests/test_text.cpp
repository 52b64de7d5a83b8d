// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "awmfuse/text.hpp"
#include "test_util.hpp"

using namespace awm;

TEST_CASE("stub provider rejects tiny dims") {
  CHECK_THROWS_AS(StubProvider(4, 16, 1), ProviderError);
  CHECK_THROWS_AS(StubProvider(16, 4, 1), ProviderError);
}

TEST_CASE("stub text embeddings are deterministic unit vectors") {
  auto provider = stub_provider(64, 32, 7);
  const auto a = provider->encode_text_global("rain");
  const auto b = provider->encode_text_global("rain");
  CHECK(a.vector.vec() == b.vector.vec());
  double norm = 0.0;
  for (double v : a.vector.vec()) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));

  const auto local = provider->encode_text_local("heavy rain at night");
  const auto local2 = provider->encode_text_local("heavy rain at night");
  CHECK(local.tokens.vec() == local2.tokens.vec());
  CHECK(local.tokens.dim(0) == 4);
  CHECK(local.tokens.dim(1) == 32);
}

TEST_CASE("different strings decorrelate at dim 512") {
  auto provider = stub_provider(512, 32, 3);
  Rng rng(99);
  auto random_word = [&rng]() {
    std::string w;
    for (int i = 0; i < 8; ++i) w.push_back(char('a' + rng.below(26)));
    return w;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = provider->encode_text_global(random_word());
    const auto b = provider->encode_text_global(random_word());
    double cos = 0.0;
    for (std::size_t i = 0; i < a.vector.numel(); ++i)
      cos += a.vector[i] * b.vector[i];
    CHECK(std::fabs(cos) < 0.5);
  }
}

TEST_CASE("image embeddings are deterministic, unit norm, content sensitive") {
  auto provider = stub_provider(64, 32, 5);
  const ImageRgb img = testutil::synth_scene(16, 16, 1);
  const auto e1 = provider->encode_image(img);
  const auto e2 = provider->encode_image(img);
  CHECK(e1.vector.vec() == e2.vector.vec());
  double norm = 0.0;
  for (double v : e1.vector.vec()) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));

  const ImageRgb other = testutil::synth_scene(16, 16, 2);
  const auto e3 = provider->encode_image(other);
  CHECK(e1.vector.vec() != e3.vector.vec());
}

TEST_CASE("token counting splits on whitespace") {
  CHECK(count_tokens("") == 0);
  CHECK(count_tokens("one") == 1);
  CHECK(count_tokens("  spaced   out\ttokens \n here ") == 4);
}

TEST_CASE("sidecar round trip and schema validation") {
  testutil::TempDir dir("sidecar");
  TextBundle b;
  b.image_id = "pair_001";
  b.caption = "a street scene degraded by heavy rain";
  b.detail = "rain streaks cross the frame and blur distant buildings";
  b.clean_description = "a clear street scene";
  save_text_bundle(b, dir.file("ok.json"));

  const TextBundle loaded = load_text_bundle(dir.file("ok.json"));
  CHECK(loaded.image_id == b.image_id);
  CHECK(loaded.caption == b.caption);
  CHECK(loaded.detail == b.detail);
  CHECK(loaded.clean_description == b.clean_description);

  SUBCASE("missing detail is an error only when required") {
    std::ofstream(dir.file("nodetail.json"))
        << R"({"image_id":"x","caption":"c","clean_description":"d"})";
    CHECK_THROWS_AS(load_text_bundle(dir.file("nodetail.json")), SchemaError);
    const TextBundle tolerated =
        load_text_bundle(dir.file("nodetail.json"), nullptr, false);
    CHECK(tolerated.detail.empty());
  }

  SUBCASE("missing caption is always an error") {
    std::ofstream(dir.file("nocap.json"))
        << R"({"image_id":"x","detail":"d","clean_description":"c"})";
    CHECK_THROWS_AS(load_text_bundle(dir.file("nocap.json")), SchemaError);
  }

  SUBCASE("token budget enforcement with an attached provider") {
    auto provider =
        std::make_shared<StubProvider>(32, 32, 1, /*max_tokens=*/12);
    TextBundle big = b;
    big.detail =
        "one two three four five six seven eight nine ten eleven twelve "
        "thirteen fourteen";
    save_text_bundle(big, dir.file("big.json"));
    CHECK_THROWS_AS(load_text_bundle(dir.file("big.json"), provider.get()),
                    TokenBudgetExceeded);
    CHECK_NOTHROW(load_text_bundle(dir.file("ok.json"), provider.get()));
  }

  SUBCASE("malformed json is a schema error") {
    std::ofstream(dir.file("broken.json")) << "{not json";
    CHECK_THROWS_AS(load_text_bundle(dir.file("broken.json")), SchemaError);
  }
}

TEST_CASE("text corruption modes") {
  TextBundle b;
  b.image_id = "x";
  b.caption = "a foggy harbor scene";
  b.detail =
      "w01 w02 w03 w04 w05 w06 w07 w08 w09 w10 w11 w12 w13 w14 w15 w16 w17 "
      "w18 w19 w20 w21 w22 w23 w24 w25 w26 w27 w28 w29 w30 w31 w32 w33 w34 "
      "w35 w36 w37 w38 w39 w40";
  b.clean_description = "a clear harbor scene";

  SUBCASE("reduced halves the detail word count and keeps the caption") {
    const TextBundle r = corrupt_text(b, TextMode::kReduced, 1);
    CHECK(count_tokens(r.detail) == 20);
    CHECK(r.detail.substr(0, 3) == "w01");
    CHECK(r.caption == b.caption);
    CHECK(r.clean_description == b.clean_description);
    TextBundle odd = b;
    odd.detail = "a b c d e";
    CHECK(count_tokens(corrupt_text(odd, TextMode::kReduced, 1).detail) == 2);
  }

  SUBCASE("noisy replaces caption and detail deterministically per seed") {
    const TextBundle n1 = corrupt_text(b, TextMode::kNoisy, 5);
    const TextBundle n2 = corrupt_text(b, TextMode::kNoisy, 5);
    const TextBundle n3 = corrupt_text(b, TextMode::kNoisy, 6);
    CHECK(n1.caption == n2.caption);
    CHECK(n1.detail == n2.detail);
    CHECK(n1.detail != n3.detail);
    CHECK(n1.caption != b.caption);
    CHECK(n1.detail != b.detail);
    CHECK(n1.clean_description == b.clean_description);
    CHECK(count_tokens(n1.caption) == count_tokens(b.caption));
  }

  SUBCASE("augmented repeats the detail up to the token budget") {
    CorruptOptions opts;
    opts.max_tokens = 77;
    const TextBundle a = corrupt_text(b, TextMode::kAugmented, 2, opts);
    CHECK(count_tokens(a.detail) <= 77);
    CHECK(count_tokens(a.detail) > count_tokens(b.detail));
    CHECK(a.caption == b.caption);
  }

  SUBCASE("clean mode is a no-op") {
    const TextBundle c = corrupt_text(b, TextMode::kClean, 9);
    CHECK(c.detail == b.detail);
    CHECK(c.caption == b.caption);
  }
}

TEST_CASE("embedding cache: hits skip the provider and stay bit-identical") {
  testutil::TempDir dir("cache");
  auto counting =
      std::make_shared<CountingProvider>(stub_provider(32, 16, 9));
  auto cached = embedding_cache(counting, dir.path());

  const auto first = cached->encode_text_global("misty bridge");
  CHECK(counting->text_global_calls == 1);
  const auto second = cached->encode_text_global("misty bridge");
  CHECK(counting->text_global_calls == 1);  // served from disk
  CHECK(first.vector.vec() == second.vector.vec());

  const auto local1 = cached->encode_text_local("three word phrase");
  const auto local2 = cached->encode_text_local("three word phrase");
  CHECK(counting->text_local_calls == 1);
  CHECK(local1.tokens.vec() == local2.tokens.vec());

  const ImageRgb img = testutil::synth_scene(12, 12, 77);
  const auto img1 = cached->encode_image(img);
  const auto img2 = cached->encode_image(img);
  CHECK(counting->image_calls == 1);
  CHECK(img1.vector.vec() == img2.vector.vec());

  SUBCASE("corrupted entries are recomputed and repaired") {
    namespace fs = std::filesystem;
    for (const auto& entry : fs::directory_iterator(dir.path()))
      std::ofstream(entry.path(), std::ios::trunc) << "garbage";
    const auto repaired = cached->encode_text_global("misty bridge");
    CHECK(counting->text_global_calls == 2);  // recomputed once
    CHECK(repaired.vector.vec() == first.vector.vec());
    const auto hit_again = cached->encode_text_global("misty bridge");
    CHECK(counting->text_global_calls == 2);  // repaired file now serves
    CHECK(hit_again.vector.vec() == first.vector.vec());
  }
}

TEST_CASE("aligned provider pins registered text to image embeddings") {
  auto stub = stub_provider(32, 16, 4);
  auto aligned = std::make_shared<AlignedProvider>(stub);
  const ImageRgb img = testutil::synth_scene(16, 16, 8);
  aligned->register_alignment("a clear mountain scene", img);

  const auto text_emb = aligned->encode_text_global("a clear mountain scene");
  const auto img_emb = aligned->encode_image(img);
  CHECK(text_emb.vector.vec() == img_emb.vector.vec());

  // Unregistered text falls through to the stub.
  const auto other = aligned->encode_text_global("unrelated words");
  CHECK(other.vector.vec() == stub->encode_text_global("unrelated words").vector.vec());

  // Registration changes the provider identity (cache keying).
  auto aligned2 = std::make_shared<AlignedProvider>(stub);
  CHECK(aligned->id() != aligned2->id());
}
