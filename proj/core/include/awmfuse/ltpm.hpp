// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "awmfuse/nn.hpp"
#include "awmfuse/text.hpp"

namespace awm {

/// (1 + gamma) (.) x + beta with per-channel broadcast over space.
/// Invertible whenever gamma > -1.
Tensor affine_modulate(const Tensor& x, const Tensor& gamma,
                       const Tensor& beta);

/// Three parallel 3x3 convolutions at strictly increasing dilation
/// rates (same-padded), concatenated and reduced back to the input
/// channel count by a 1x1 convolution.
struct DilatedPyramid {
  std::array<nn::Conv2d, 3> branches;
  nn::Conv2d fuse;
  std::array<int, 3> rates{1, 2, 3};
  ad::Value operator()(ad::Tape& t, ad::Value x) const;
};

DilatedPyramid make_dilated_pyramid(nn::ParamStore& ps,
                                    const std::string& name, int channels,
                                    std::array<int, 3> rates = {1, 2, 3});

struct LtpmConfig {
  int channels = 48;
  int text_dim_global = 512;  // encoder image-embedding dim, drives (gamma, beta)
  int text_dim_local = 256;   // detail token dim
  int attn_dim = 16;
  int se_reduction = 4;
  int mod_hidden = 64;
  std::array<int, 3> dilation_rates{1, 2, 3};
};

/// Local text perception: two SE gates, encoder-image-conditioned affine
/// modulation (starting as the identity), detail-token cross-attention,
/// then multi-scale extraction through the dilated pyramid. Shape
/// preserving.
class Ltpm {
 public:
  Ltpm(nn::ParamStore& ps, const std::string& name, const LtpmConfig& cfg);

  /// Either embedding pointer may be null, which skips that injection.
  ad::Value operator()(ad::Tape& t, ad::Value f,
                       const Tensor* clip_image_embedding,
                       const Tensor* detail_tokens) const;

  const LtpmConfig& config() const { return cfg_; }

 private:
  LtpmConfig cfg_;
  nn::SeBlock se1_;
  nn::SeBlock se2_;
  nn::Linear mod_hidden_;
  nn::Linear mod_gamma_;  // zero-initialized: modulation starts as identity
  nn::Linear mod_beta_;
  nn::CrossAttention attn_;
  DilatedPyramid pyramid_;
};

}  // namespace awm
