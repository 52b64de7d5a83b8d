// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "awmfuse/autodiff.hpp"
#include "awmfuse/image.hpp"
#include "awmfuse/tensor.hpp"

namespace awm {

/// Per-image text sidecar: a short global caption, a detailed local
/// description, and a description of the clean scene used as the
/// alignment target during training.
struct TextBundle {
  std::string image_id;
  std::string caption;
  std::string detail;
  std::string clean_description;
};

struct GlobalTextEmbedding {
  Tensor vector;  // [D_g]
  std::string provenance;
};

struct LocalTextEmbedding {
  Tensor tokens;  // [T, D_l]
  std::string provenance;
};

struct ImageEmbedding {
  Tensor vector;  // [D_g]
};

/// Deterministic text/image encoder pair sharing one embedding space for
/// global features. Implementations must map identical inputs to
/// identical outputs.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual GlobalTextEmbedding encode_text_global(const std::string& text) const = 0;
  virtual LocalTextEmbedding encode_text_local(const std::string& text) const = 0;
  virtual ImageEmbedding encode_image(const ImageRgb& image) const = 0;
  virtual int dim_global() const = 0;
  virtual int dim_local() const = 0;
  virtual int max_tokens() const = 0;
  virtual std::string id() const = 0;
};

/// Providers that can embed an in-graph image, so gradients can flow
/// from an embedding-space loss back to pixels.
class DifferentiableImageEncoder {
 public:
  virtual ~DifferentiableImageEncoder() = default;
  /// rgb is a [3,H,W] value; the result is a unit-norm [D_g] value.
  virtual ad::Value encode_image_node(ad::Tape& t, ad::Value rgb) const = 0;
};

/// Offline stand-in for a pretrained encoder pair: text is hashed to
/// seeded unit vectors (per token for the local branch) and images are
/// embedded by a fixed random projection of 8x8-pooled pixels followed
/// by normalization.
class StubProvider : public EmbeddingProvider,
                     public DifferentiableImageEncoder {
 public:
  StubProvider(int dim_global, int dim_local, std::uint64_t seed,
               int max_tokens = 77);

  GlobalTextEmbedding encode_text_global(const std::string& text) const override;
  LocalTextEmbedding encode_text_local(const std::string& text) const override;
  ImageEmbedding encode_image(const ImageRgb& image) const override;
  ad::Value encode_image_node(ad::Tape& t, ad::Value rgb) const override;
  int dim_global() const override { return dim_global_; }
  int dim_local() const override { return dim_local_; }
  int max_tokens() const override { return max_tokens_; }
  std::string id() const override;

  static constexpr int kPoolGrid = 8;

 private:
  int dim_global_;
  int dim_local_;
  int max_tokens_;
  std::uint64_t seed_;
  Tensor projection_;  // [D_g, 3*kPoolGrid^2]
};

/// Throws ProviderError unless both dims are >= 8.
std::shared_ptr<StubProvider> stub_provider(int dim_global, int dim_local,
                                            std::uint64_t seed);

/// Decorator that pins chosen text strings to the embedding of a paired
/// image, modelling an encoder whose image and text towers agree on
/// matching content. Unregistered text falls through to the inner
/// provider.
class AlignedProvider : public EmbeddingProvider,
                        public DifferentiableImageEncoder {
 public:
  explicit AlignedProvider(std::shared_ptr<EmbeddingProvider> inner);
  void register_alignment(const std::string& text, const ImageRgb& image);

  GlobalTextEmbedding encode_text_global(const std::string& text) const override;
  LocalTextEmbedding encode_text_local(const std::string& text) const override;
  ImageEmbedding encode_image(const ImageRgb& image) const override;
  ad::Value encode_image_node(ad::Tape& t, ad::Value rgb) const override;
  int dim_global() const override { return inner_->dim_global(); }
  int dim_local() const override { return inner_->dim_local(); }
  int max_tokens() const override { return inner_->max_tokens(); }
  std::string id() const override;

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::vector<std::pair<std::string, Tensor>> registered_;
  std::uint64_t fingerprint_ = 0xcbf29ce484222325ull;
};

/// Decorator counting how often each encoder is invoked.
class CountingProvider : public EmbeddingProvider,
                         public DifferentiableImageEncoder {
 public:
  explicit CountingProvider(std::shared_ptr<EmbeddingProvider> inner)
      : inner_(std::move(inner)) {}

  GlobalTextEmbedding encode_text_global(const std::string& text) const override {
    ++text_global_calls;
    return inner_->encode_text_global(text);
  }
  LocalTextEmbedding encode_text_local(const std::string& text) const override {
    ++text_local_calls;
    return inner_->encode_text_local(text);
  }
  ImageEmbedding encode_image(const ImageRgb& image) const override {
    ++image_calls;
    return inner_->encode_image(image);
  }
  ad::Value encode_image_node(ad::Tape& t, ad::Value rgb) const override;
  int dim_global() const override { return inner_->dim_global(); }
  int dim_local() const override { return inner_->dim_local(); }
  int max_tokens() const override { return inner_->max_tokens(); }
  std::string id() const override { return inner_->id(); }

  mutable long text_global_calls = 0;
  mutable long text_local_calls = 0;
  mutable long image_calls = 0;

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
};

/// Content-addressed on-disk embedding cache. Hits are bit-identical to
/// the wrapped provider's output; corrupt entries are recomputed and
/// repaired in place. Writes are serialized.
class CachingProvider : public EmbeddingProvider,
                        public DifferentiableImageEncoder {
 public:
  CachingProvider(std::shared_ptr<EmbeddingProvider> inner,
                  std::string store_dir);

  GlobalTextEmbedding encode_text_global(const std::string& text) const override;
  LocalTextEmbedding encode_text_local(const std::string& text) const override;
  ImageEmbedding encode_image(const ImageRgb& image) const override;
  ad::Value encode_image_node(ad::Tape& t, ad::Value rgb) const override;
  int dim_global() const override { return inner_->dim_global(); }
  int dim_local() const override { return inner_->dim_local(); }
  int max_tokens() const override { return inner_->max_tokens(); }
  std::string id() const override { return inner_->id(); }

 private:
  bool read_entry(const std::string& key, int rows, int cols, Tensor* out) const;
  void write_entry(const std::string& key, const Tensor& value) const;
  std::string key_for(const std::string& kind, const std::string& payload) const;

  std::shared_ptr<EmbeddingProvider> inner_;
  std::string dir_;
  mutable std::mutex write_mutex_;
};

std::shared_ptr<CachingProvider> embedding_cache(
    std::shared_ptr<EmbeddingProvider> provider, const std::string& store_dir);

// ---- sidecar I/O -------------------------------------------------------------

/// Loads a JSON sidecar {"image_id","caption","detail","clean_description"}.
/// Missing fields raise SchemaError ("detail" only when required); when a
/// provider is given, every present string is checked against its token
/// budget (TokenBudgetExceeded).
TextBundle load_text_bundle(const std::string& path,
                            const EmbeddingProvider* provider = nullptr,
                            bool require_detail = true);

void save_text_bundle(const TextBundle& bundle, const std::string& path);

/// Whitespace token count; the stub provider's notion of text length.
int count_tokens(const std::string& text);

// ---- corruption (ablation inputs) ---------------------------------------------

enum class TextMode { kClean, kNoisy, kReduced, kAugmented };

TextMode text_mode_from_string(const std::string& name);
std::string to_string(TextMode mode);

struct CorruptOptions {
  const std::vector<std::string>* pool = nullptr;  // default: built-in pool
  int max_tokens = 77;
};

/// kNoisy: caption and detail are rebuilt from a seeded shuffle of an
/// unrelated-descriptions vocabulary. kReduced: detail truncated to the
/// first half of its words (floor); caption untouched. kAugmented:
/// detail repeated with filler clauses up to the token budget. The clean
/// description is never altered.
TextBundle corrupt_text(const TextBundle& bundle, TextMode mode,
                        std::uint64_t seed, const CorruptOptions& opts = {});

/// Built-in pool of descriptions unrelated to any fusion scene.
const std::vector<std::string>& unrelated_descriptions_pool();

/// Loads one description per non-empty line.
std::vector<std::string> load_descriptions_pool(const std::string& path);

}  // namespace awm
