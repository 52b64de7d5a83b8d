// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "awmfuse/image.hpp"
#include "awmfuse/nn.hpp"
#include "awmfuse/text.hpp"

namespace awm {

// Module-level feature-map helpers. A feature map is a [C,H,W] tensor.

/// Channel split into first and last C/2 channels. Throws
/// OddChannelCount. concat of the halves reproduces the input.
std::pair<Tensor, Tensor> split_halves(const Tensor& f);

/// Plain channel concatenation of the two left halves.
Tensor fuse_left(const Tensor& vi_l, const Tensor& ir_l);

/// Channel concatenation followed by 3x3 stride-1 max pooling over the
/// valid neighborhood of each position (spatial size preserved).
Tensor fuse_right(const Tensor& vi_r, const Tensor& ir_r);

struct GtpmConfig {
  int base_channels = 48;  // even; channel count handed to the backbone
  int attn_dim = 16;
  int text_dim = 512;    // global text/image embedding dim
  bool text_enabled = true;
};

/// Global text perception: 1x1 channel expansion of both modalities,
/// channel split, direct + max-pooled fusion streams, per-stream
/// residual refinement, stream merge, then injection of the encoder
/// image embedding and caption-query cross-attention.
class Gtpm {
 public:
  Gtpm(nn::ParamStore& ps, const GtpmConfig& cfg);

  /// vi is a [3,H,W] value, ir a [1,H,W] value. caption/clip embeddings
  /// may be null when the text path is disabled.
  ad::Value operator()(ad::Tape& t, ad::Value vi, ad::Value ir,
                       const Tensor* caption_embedding,
                       const Tensor* clip_image_embedding) const;

  /// Convenience plain forward for inspection and tests.
  Tensor forward(const ImageRgb& vi, const ImageGray& ir,
                 const Tensor* caption_embedding,
                 const Tensor* clip_image_embedding) const;

  const GtpmConfig& config() const { return cfg_; }
  const nn::CrossAttention& attention() const { return attn_; }

 private:
  GtpmConfig cfg_;
  nn::Conv2d expand_vi_;
  nn::Conv2d expand_ir_;
  nn::ResidualConvBlock res_left_;
  nn::ResidualConvBlock res_right_;
  nn::Conv2d merge_;
  nn::Linear clip_proj_;
  nn::CrossAttention attn_;
};

}  // namespace awm
