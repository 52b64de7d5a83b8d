// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "awmfuse/backbone.hpp"
#include "awmfuse/decoder.hpp"
#include "awmfuse/gtpm.hpp"
#include "awmfuse/ltpm.hpp"

namespace awm {

struct ModelConfig {
  // Desk-scale defaults; the full-scale schedule
  // (48..384 channels, blocks [8,10,10,12,10,10,8]) stays selectable.
  std::vector<int> channels = {8, 16, 32, 16, 8};
  std::vector<int> blocks = {1, 1, 2, 1, 1};
  int state_dim = 8;
  int se_reduction = 4;
  int attn_dim = 16;
  int mod_hidden = 64;
  int wt_levels = 2;
  std::array<int, 3> dilation_rates{1, 2, 3};
  int text_dim_global = 512;
  int text_dim_local = 256;
  bool gtpm_text_enabled = true;
  bool ltpm_enabled = true;

  int downsamples() const { return (static_cast<int>(channels.size()) - 1) / 2; }
  int spatial_multiple() const;
  void validate() const;
  std::string canonical_string() const;
  std::uint64_t hash() const;
};

struct ModelSummary {
  std::size_t param_count = 0;
  std::size_t conv_param_count = 0;
  double flops_estimate = 0.0;  // multiply-accumulates x2 for one forward
};

/// Full fusion network: GTPM -> RSSB U-Net (with LTPM applied after the
/// bottleneck stack and after the final stage) -> WTConv decoder.
class AwmFuseModel {
 public:
  struct TextInputs {
    const Tensor* caption_embedding = nullptr;     // [D_g]
    const Tensor* clip_image_embedding = nullptr;  // [D_g]
    const Tensor* detail_tokens = nullptr;         // [T,D_l]
  };

  AwmFuseModel(const ModelConfig& cfg, std::uint64_t init_seed);

  /// Training-graph forward; vi [3,H,W], ir [1,H,W] with H,W divisible
  /// by spatial_multiple(). Returns the RGB output node (unclamped; the
  /// YCbCr planes behind it are sigmoid-bounded).
  ad::Value forward(ad::Tape& t, ad::Value vi, ad::Value ir,
                    const TextInputs& text) const;

  /// Inference on an arbitrary-size pair: reflect-pads to the required
  /// multiple, forwards, crops back and clamps to [0,1]. Deterministic.
  ImageRgb fuse_pair(const ImagePair& pair, const TextInputs& text) const;

  ModelSummary summary(int h, int w) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  nn::ParamStore params_;
  std::optional<Gtpm> gtpm_;
  std::optional<Unet> unet_;
  std::optional<Ltpm> ltpm_mid_;
  std::optional<Ltpm> ltpm_out_;
  std::optional<Decoder> decoder_;
};

/// Exact learnable-parameter count plus a per-layer multiply-accumulate
/// estimate for an h x w input.
ModelSummary model_summary(const ModelConfig& cfg, int h, int w);

}  // namespace awm
