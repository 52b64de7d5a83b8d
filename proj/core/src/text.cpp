// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/text.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace awm {

namespace {

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream is(text);
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

Tensor seeded_unit_vector(int dim, std::uint64_t seed) {
  Rng rng(seed);
  Tensor v = Tensor::normal({dim}, rng);
  double nsq = 0.0;
  for (double x : v.vec()) nsq += x * x;
  const double n = std::max(std::sqrt(nsq), 1e-12);
  for (double& x : v.vec()) x /= n;
  return v;
}

}  // namespace

int count_tokens(const std::string& text) {
  std::istringstream is(text);
  std::string w;
  int n = 0;
  while (is >> w) ++n;
  return n;
}

// ---- stub provider -------------------------------------------------------------

StubProvider::StubProvider(int dim_global, int dim_local, std::uint64_t seed,
                           int max_tokens)
    : dim_global_(dim_global),
      dim_local_(dim_local),
      max_tokens_(max_tokens),
      seed_(seed) {
  if (dim_global < 8 || dim_local < 8)
    throw ProviderError("stub provider requires dims >= 8");
  const int in = 3 * kPoolGrid * kPoolGrid;
  Rng rng(hash_combine(seed_, fnv1a64("image-projection")));
  projection_ = Tensor::normal({dim_global_, in}, rng, 1.0 / std::sqrt(double(in)));
}

std::shared_ptr<StubProvider> stub_provider(int dim_global, int dim_local,
                                            std::uint64_t seed) {
  return std::make_shared<StubProvider>(dim_global, dim_local, seed);
}

std::string StubProvider::id() const {
  return "stub:dg=" + std::to_string(dim_global_) +
         ":dl=" + std::to_string(dim_local_) +
         ":seed=" + std::to_string(seed_);
}

GlobalTextEmbedding StubProvider::encode_text_global(
    const std::string& text) const {
  GlobalTextEmbedding e;
  e.vector = seeded_unit_vector(
      dim_global_, hash_combine(seed_, fnv1a64("g:" + text)));
  e.provenance = id();
  return e;
}

LocalTextEmbedding StubProvider::encode_text_local(
    const std::string& text) const {
  std::vector<std::string> words = split_words(text);
  if (static_cast<int>(words.size()) > max_tokens_)
    words.resize(static_cast<std::size_t>(max_tokens_));
  LocalTextEmbedding e;
  e.provenance = id();
  const int t = std::max<int>(1, static_cast<int>(words.size()));
  e.tokens = Tensor({t, dim_local_});
  for (int i = 0; i < t; ++i) {
    const std::string& word =
        words.empty() ? text : words[static_cast<std::size_t>(i)];
    Tensor v = seeded_unit_vector(
        dim_local_, hash_combine(seed_, fnv1a64("l:" + std::to_string(i) +
                                                ":" + word)));
    std::copy(v.data(), v.data() + dim_local_,
              e.tokens.data() + static_cast<std::size_t>(i) * dim_local_);
  }
  return e;
}

ad::Value StubProvider::encode_image_node(ad::Tape& t, ad::Value rgb) const {
  const Tensor& img = t.val(rgb);
  if (img.rank() != 3 || img.dim(0) != 3)
    throw ProviderError("image embedding expects [3,H,W]");
  if (img.dim(1) < kPoolGrid || img.dim(2) < kPoolGrid)
    throw ProviderError("image smaller than the embedding pool grid");
  ad::Value pooled = ad::avgpool_to_grid(t, rgb, kPoolGrid);
  ad::Value flat = ad::reshape(t, pooled, {3 * kPoolGrid * kPoolGrid});
  ad::Value projected = ad::linear(t, flat, t.constant(projection_));
  return ad::l2_normalize(t, projected);
}

ImageEmbedding StubProvider::encode_image(const ImageRgb& image) const {
  // Same arithmetic as the differentiable path, run off-graph.
  ad::Tape tape;
  ad::Value v = encode_image_node(tape, tape.constant(image.pixels));
  return ImageEmbedding{tape.val(v)};
}

// ---- aligned provider ------------------------------------------------------------

AlignedProvider::AlignedProvider(std::shared_ptr<EmbeddingProvider> inner)
    : inner_(std::move(inner)) {
  if (!inner_) throw ProviderError("aligned provider needs an inner provider");
}

void AlignedProvider::register_alignment(const std::string& text,
                                         const ImageRgb& image) {
  Tensor emb = inner_->encode_image(image).vector;
  fingerprint_ = fnv1a64(text, fingerprint_);
  for (double v : emb.vec()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    fingerprint_ = hash_combine(fingerprint_, bits);
  }
  for (auto& [key, value] : registered_)
    if (key == text) {
      value = std::move(emb);
      return;
    }
  registered_.emplace_back(text, std::move(emb));
}

GlobalTextEmbedding AlignedProvider::encode_text_global(
    const std::string& text) const {
  for (const auto& [key, value] : registered_)
    if (key == text) return GlobalTextEmbedding{value, id()};
  return inner_->encode_text_global(text);
}

LocalTextEmbedding AlignedProvider::encode_text_local(
    const std::string& text) const {
  return inner_->encode_text_local(text);
}

ImageEmbedding AlignedProvider::encode_image(const ImageRgb& image) const {
  return inner_->encode_image(image);
}

ad::Value AlignedProvider::encode_image_node(ad::Tape& t, ad::Value rgb) const {
  auto* diff = dynamic_cast<DifferentiableImageEncoder*>(inner_.get());
  if (!diff)
    throw ProviderError("inner provider has no differentiable image encoder");
  return diff->encode_image_node(t, rgb);
}

std::string AlignedProvider::id() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fingerprint_));
  return "aligned(" + inner_->id() + "):" + buf;
}

ad::Value CountingProvider::encode_image_node(ad::Tape& t, ad::Value rgb) const {
  auto* diff = dynamic_cast<DifferentiableImageEncoder*>(inner_.get());
  if (!diff)
    throw ProviderError("inner provider has no differentiable image encoder");
  return diff->encode_image_node(t, rgb);
}

// ---- caching provider -------------------------------------------------------------

namespace {
constexpr char kCacheMagic[4] = {'A', 'W', 'M', 'C'};
}

CachingProvider::CachingProvider(std::shared_ptr<EmbeddingProvider> inner,
                                 std::string store_dir)
    : inner_(std::move(inner)), dir_(std::move(store_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache dir " + dir_ + ": " + ec.message());
}

std::shared_ptr<CachingProvider> embedding_cache(
    std::shared_ptr<EmbeddingProvider> provider, const std::string& store_dir) {
  return std::make_shared<CachingProvider>(std::move(provider), store_dir);
}

std::string CachingProvider::key_for(const std::string& kind,
                                     const std::string& payload) const {
  const std::uint64_t h =
      fnv1a64(payload, fnv1a64(kind, fnv1a64(inner_->id())));
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Reads an entry and checks its header against the expected dims. Any
// inconsistency (truncation, wrong shape, non-finite payload) is treated
// as a miss so the caller recomputes and repairs the file.
bool CachingProvider::read_entry(const std::string& key, int rows, int cols,
                                 Tensor* out) const {
  std::ifstream in(dir_ + "/" + key + ".emb", std::ios::binary);
  if (!in) return false;
  char magic[4];
  std::int32_t r = 0, c = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&r), 4);
  in.read(reinterpret_cast<char*>(&c), 4);
  if (!in || std::memcmp(magic, kCacheMagic, 4) != 0 || r != rows || c != cols)
    return false;
  Tensor value({rows, cols});
  in.read(reinterpret_cast<char*>(value.data()),
          static_cast<std::streamsize>(value.numel() * sizeof(double)));
  if (!in || in.gcount() !=
                 static_cast<std::streamsize>(value.numel() * sizeof(double)))
    return false;
  if (!value.all_finite()) return false;
  *out = std::move(value);
  return true;
}

void CachingProvider::write_entry(const std::string& key,
                                  const Tensor& value) const {
  std::lock_guard<std::mutex> lock(write_mutex_);
  const std::string path = dir_ + "/" + key + ".emb";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cache store not writable: " + path);
  const std::int32_t r = value.rank() == 2 ? value.dim(0) : 1;
  const std::int32_t c = value.rank() == 2 ? value.dim(1)
                                           : static_cast<int>(value.numel());
  out.write(kCacheMagic, 4);
  out.write(reinterpret_cast<const char*>(&r), 4);
  out.write(reinterpret_cast<const char*>(&c), 4);
  out.write(reinterpret_cast<const char*>(value.data()),
            static_cast<std::streamsize>(value.numel() * sizeof(double)));
  if (!out) throw IoError("cache store not writable: " + path);
}

GlobalTextEmbedding CachingProvider::encode_text_global(
    const std::string& text) const {
  const std::string key = key_for("tg", text);
  Tensor cached;
  if (read_entry(key, 1, inner_->dim_global(), &cached))
    return GlobalTextEmbedding{cached.reshaped({inner_->dim_global()}),
                               inner_->id()};
  GlobalTextEmbedding fresh = inner_->encode_text_global(text);
  write_entry(key, fresh.vector);
  return fresh;
}

LocalTextEmbedding CachingProvider::encode_text_local(
    const std::string& text) const {
  // Token count varies per text; stored rows are trusted only if they
  // match a fresh header read.
  const std::string key = key_for("tl", text);
  std::ifstream probe(dir_ + "/" + key + ".emb", std::ios::binary);
  if (probe) {
    char magic[4];
    std::int32_t r = 0, c = 0;
    probe.read(magic, 4);
    probe.read(reinterpret_cast<char*>(&r), 4);
    probe.read(reinterpret_cast<char*>(&c), 4);
    probe.close();
    Tensor cached;
    if (r >= 1 && c == inner_->dim_local() && read_entry(key, r, c, &cached))
      return LocalTextEmbedding{std::move(cached), inner_->id()};
  }
  LocalTextEmbedding fresh = inner_->encode_text_local(text);
  write_entry(key, fresh.tokens);
  return fresh;
}

ImageEmbedding CachingProvider::encode_image(const ImageRgb& image) const {
  std::string payload(reinterpret_cast<const char*>(image.pixels.data()),
                      image.pixels.numel() * sizeof(double));
  payload += std::to_string(image.height()) + "x" + std::to_string(image.width());
  const std::string key = key_for("img", payload);
  Tensor cached;
  if (read_entry(key, 1, inner_->dim_global(), &cached))
    return ImageEmbedding{cached.reshaped({inner_->dim_global()})};
  ImageEmbedding fresh = inner_->encode_image(image);
  write_entry(key, fresh.vector);
  return fresh;
}

ad::Value CachingProvider::encode_image_node(ad::Tape& t, ad::Value rgb) const {
  auto* diff = dynamic_cast<DifferentiableImageEncoder*>(inner_.get());
  if (!diff)
    throw ProviderError("inner provider has no differentiable image encoder");
  return diff->encode_image_node(t, rgb);
}

// ---- sidecar I/O -------------------------------------------------------------------

TextBundle load_text_bundle(const std::string& path,
                            const EmbeddingProvider* provider,
                            bool require_detail) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sidecar: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("sidecar " + path + ": " + e.what());
  }
  auto field = [&](const char* name, bool required) -> std::string {
    if (!j.contains(name) || !j[name].is_string()) {
      if (required)
        throw SchemaError("sidecar " + path + ": missing field \"" + name + "\"");
      return {};
    }
    return j[name].get<std::string>();
  };
  TextBundle b;
  b.image_id = field("image_id", true);
  b.caption = field("caption", true);
  b.detail = field("detail", require_detail);
  b.clean_description = field("clean_description", true);
  if (provider) {
    const int budget = provider->max_tokens();
    for (const std::string* s : {&b.caption, &b.detail, &b.clean_description})
      if (count_tokens(*s) > budget)
        throw TokenBudgetExceeded("sidecar " + path + ": text of " +
                                  std::to_string(count_tokens(*s)) +
                                  " tokens exceeds budget " +
                                  std::to_string(budget));
  }
  return b;
}

void save_text_bundle(const TextBundle& bundle, const std::string& path) {
  nlohmann::json j;
  j["image_id"] = bundle.image_id;
  j["caption"] = bundle.caption;
  j["detail"] = bundle.detail;
  j["clean_description"] = bundle.clean_description;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write sidecar: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write sidecar: " + path);
}

// ---- corruption ----------------------------------------------------------------------

TextMode text_mode_from_string(const std::string& name) {
  if (name == "clean") return TextMode::kClean;
  if (name == "noisy") return TextMode::kNoisy;
  if (name == "reduced") return TextMode::kReduced;
  if (name == "augmented") return TextMode::kAugmented;
  throw Error("unknown text mode: " + name);
}

std::string to_string(TextMode mode) {
  switch (mode) {
    case TextMode::kClean: return "clean";
    case TextMode::kNoisy: return "noisy";
    case TextMode::kReduced: return "reduced";
    case TextMode::kAugmented: return "augmented";
  }
  return "clean";
}

const std::vector<std::string>& unrelated_descriptions_pool() {
  static const std::vector<std::string> pool = {
      "a ceramic teapot resting on a lace tablecloth beside porcelain cups",
      "an orchestra tuning instruments in a gilded concert hall",
      "a coral reef crowded with clownfish and drifting sea turtles",
      "a library reading room with tall oak shelves and green lamps",
      "freshly baked sourdough loaves cooling on a wooden rack",
      "a hot air balloon festival over rolling lavender fields at dawn",
      "a chessboard mid-game on a marble table in a quiet courtyard",
      "penguins huddling on pack ice under a pale antarctic sun",
      "a potter shaping wet clay on a spinning wheel in a sunlit studio",
      "vintage motorcycles lined up at an indoor collectors exhibition",
      "a greenhouse of orchids with condensation on the glass panes",
      "children building sandcastles on a calm mediterranean beach",
      "a violin maker carving a spruce top with curled wood shavings",
      "a night market stall selling paper lanterns and candied fruit",
      "an astronaut portrait floating inside a space station module",
      "a herd of alpacas grazing on terraced andean hillsides",
      "a barista pouring latte art in a narrow espresso bar",
      "origami cranes strung across a classroom window",
      "a lighthouse keeper's desk with maps, ink pens and a brass compass",
      "a ballet rehearsal in a mirrored studio with worn wooden floors",
      "rows of beehives at the edge of a blooming clover meadow",
      "a glassblower turning molten glass over a roaring furnace",
      "a tailor pinning a suit jacket on a dress form",
      "an antique carousel with painted horses spinning at dusk",
  };
  return pool;
}

std::vector<std::string> load_descriptions_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open descriptions pool: " + path);
  std::vector<std::string> pool;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) pool.push_back(line);
  return pool;
}

namespace {

std::vector<std::string> pool_vocabulary(const std::vector<std::string>& pool) {
  std::vector<std::string> vocab;
  for (const std::string& line : pool) {
    std::vector<std::string> words = split_words(line);
    vocab.insert(vocab.end(), words.begin(), words.end());
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  return vocab;
}

std::string sample_words(const std::vector<std::string>& vocab, int count,
                         Rng& rng) {
  std::vector<std::string> words;
  words.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    words.push_back(vocab[rng.below(vocab.size())]);
  return join_words(words);
}

}  // namespace

TextBundle corrupt_text(const TextBundle& bundle, TextMode mode,
                        std::uint64_t seed, const CorruptOptions& opts) {
  TextBundle out = bundle;
  switch (mode) {
    case TextMode::kClean:
      break;
    case TextMode::kNoisy: {
      const auto& pool = opts.pool ? *opts.pool : unrelated_descriptions_pool();
      const std::vector<std::string> vocab = pool_vocabulary(pool);
      if (vocab.empty()) throw Error("noisy text: empty descriptions pool");
      Rng rng(seed);
      out.caption = sample_words(vocab, std::max(3, count_tokens(bundle.caption)), rng);
      out.detail = sample_words(vocab, std::max(3, count_tokens(bundle.detail)), rng);
      break;
    }
    case TextMode::kReduced: {
      std::vector<std::string> words = split_words(bundle.detail);
      words.resize(words.size() / 2);
      out.detail = join_words(words);
      break;
    }
    case TextMode::kAugmented: {
      static const std::vector<std::string> fillers = {
          "with abundant and repeated elaboration",
          "described once more in redundant terms",
          "restating the very same scene again",
      };
      std::vector<std::string> words = split_words(bundle.detail);
      if (static_cast<int>(words.size()) > opts.max_tokens)
        words.resize(static_cast<std::size_t>(opts.max_tokens));
      std::vector<std::string> result = words;
      std::size_t filler_ix = 0;
      const std::size_t budget = static_cast<std::size_t>(opts.max_tokens);
      while (true) {
        std::vector<std::string> chunk =
            split_words(fillers[filler_ix % fillers.size()]);
        // Full repetition when it fits, a lone filler clause otherwise.
        if (result.size() + chunk.size() + words.size() <= budget)
          chunk.insert(chunk.end(), words.begin(), words.end());
        if (result.size() + chunk.size() > budget) break;
        result.insert(result.end(), chunk.begin(), chunk.end());
        ++filler_ix;
      }
      out.detail = join_words(result);
      break;
    }
  }
  return out;
}

}  // namespace awm
