// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "awmfuse/autodiff.hpp"
#include "awmfuse/rng.hpp"
#include "awmfuse/tensor.hpp"

namespace awm::nn {

enum class Init {
  kFanInUniform,  // U(-1/sqrt(arg), 1/sqrt(arg)), arg = fan-in
  kZero,
  kOne,
  kConst,         // arg
  kUniformSym,    // U(-arg, arg)
};

/// Owns every learnable tensor of a model, in deterministic registration
/// order (which fixes both initialization and optimizer iteration
/// order). Entries are pointer-stable.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    std::string kind;  // conv | linear | norm | scan | scale
    Tensor value;
    Tensor grad;
  };

  explicit ParamStore(std::uint64_t seed) : rng_(seed) {}

  Entry* create(const std::string& name, std::vector<int> shape,
                const std::string& kind, Init init, double arg = 0.0);

  Entry* find(const std::string& name);
  const std::deque<Entry>& entries() const { return entries_; }
  std::deque<Entry>& entries() { return entries_; }

  void zero_grads();
  std::size_t total_params() const;
  std::size_t params_of_kind(const std::string& kind) const;
  bool grads_finite() const;

 private:
  std::deque<Entry> entries_;
  std::unordered_map<std::string, Entry*> index_;
  Rng rng_;
};

/// Binds a parameter into a tape as a gradient-accumulating leaf.
inline ad::Value use(ad::Tape& t, ParamStore::Entry* e) {
  return t.leaf(e->value, &e->grad);
}

// ---- layers ----------------------------------------------------------------

struct Conv2d {
  ParamStore::Entry* w = nullptr;
  ParamStore::Entry* b = nullptr;
  ad::ConvSpec spec;
  ad::Value operator()(ad::Tape& t, ad::Value x) const;
};

/// weight [cout, cin/groups, k, k]; bias zero-initialized.
Conv2d make_conv2d(ParamStore& ps, const std::string& name, int cin, int cout,
                   int k, ad::ConvSpec spec = {}, bool bias = true);

struct Linear {
  ParamStore::Entry* w = nullptr;
  ParamStore::Entry* b = nullptr;
  ad::Value operator()(ad::Tape& t, ad::Value x) const;
};

Linear make_linear(ParamStore& ps, const std::string& name, int in, int out,
                   bool bias = true, Init weight_init = Init::kFanInUniform);

struct LayerNorm {
  ParamStore::Entry* gamma = nullptr;
  ParamStore::Entry* beta = nullptr;
  ad::Value operator()(ad::Tape& t, ad::Value x) const;
};

LayerNorm make_layer_norm(ParamStore& ps, const std::string& name,
                          int channels);

/// Squeeze-and-excitation channel gate: global average pool, two-layer
/// excitation MLP, sigmoid gate in (0,1), per-channel rescale.
struct SeBlock {
  Linear fc1;
  Linear fc2;
  ad::Value operator()(ad::Tape& t, ad::Value x) const;
  /// Gate vector alone, [C].
  ad::Value gate(ad::Tape& t, ad::Value x) const;
};

/// Throws BadReduction unless reduction divides channels.
SeBlock make_se_block(ParamStore& ps, const std::string& name, int channels,
                      int reduction);

/// x + conv3x3(silu(conv3x3(x))), shape preserving.
struct ResidualConvBlock {
  Conv2d c1;
  Conv2d c2;
  ad::Value operator()(ad::Tape& t, ad::Value x) const;
};

ResidualConvBlock make_residual_block(ParamStore& ps, const std::string& name,
                                      int channels);

/// Text-query / image-key-value scaled dot-product attention. Flattened
/// image features are layer-normalized before the key/value projections
/// so attention sharpness does not depend on the incoming feature scale.
/// The [T,attn_dim] readout is mean-pooled over tokens, projected back
/// to the channel count and broadcast-added onto the feature map.
struct CrossAttention {
  LayerNorm kv_norm;  // over channels, per spatial position
  Linear wq;          // [attn_dim, text_dim]
  Linear wk;          // [attn_dim, channels]
  Linear wv;          // [attn_dim, channels]
  Linear wo;          // [channels, attn_dim]
  int attn_dim = 0;
  ad::Value operator()(ad::Tape& t, ad::Value text_tokens, ad::Value feat) const;
  /// Row-stochastic attention matrix [T, H*W], for inspection.
  ad::Value attention_weights(ad::Tape& t, ad::Value text_tokens,
                              ad::Value feat) const;
};

CrossAttention make_cross_attention(ParamStore& ps, const std::string& name,
                                    int text_dim, int channels, int attn_dim);

}  // namespace awm::nn
