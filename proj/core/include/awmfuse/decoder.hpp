// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "awmfuse/image.hpp"
#include "awmfuse/nn.hpp"
#include "awmfuse/wavelet.hpp"

namespace awm {

/// Wavelet convolution: multi-level Haar analysis, an independent 3x3
/// depthwise convolution on every subband, exact synthesis, plus a
/// direct 3x3 spatial path. Enlarges the receptive field to roughly
/// 3 * 2^levels pixels at the cost of depthwise-only extra weights.
struct WtConv {
  int levels = 2;
  std::vector<std::array<nn::Conv2d, 3>> detail_convs;  // per level: LH, HL, HH
  nn::Conv2d ll_conv;  // coarsest approximation band
  nn::Conv2d direct;
  ad::Value operator()(ad::Tape& t, ad::Value x) const;
};

WtConv make_wtconv(nn::ParamStore& ps, const std::string& name, int channels,
                   int levels);

struct DecoderConfig {
  int channels = 48;
  int wt_levels = 2;
};

/// Reconstructs the fused RGB image: a WTConv trunk, a luminance head
/// bounded by a sigmoid, and a parallel chroma head conditioned on the
/// CbCr planes of the supplied visible image. Heads are merged in YCbCr
/// and converted to RGB.
class Decoder {
 public:
  Decoder(nn::ParamStore& ps, const DecoderConfig& cfg);

  /// Training-graph output: [3,H,W] RGB from sigmoid-bounded YCbCr
  /// planes. The RGB conversion itself is left unclamped so the loss
  /// surface stays smooth; decode() clamps at the public boundary.
  ad::Value rgb_node(ad::Tape& t, ad::Value features,
                     ad::Value chroma_source_rgb) const;

  /// Inference path; output clamped to [0,1].
  ImageRgb decode(const Tensor& features, const ImageRgb& chroma_source) const;

  const DecoderConfig& config() const { return cfg_; }

 private:
  DecoderConfig cfg_;
  WtConv trunk_;
  WtConv luma_branch_;
  nn::Conv2d luma_head_;
  nn::Conv2d chroma_in_;
  WtConv chroma_branch_;
  nn::Conv2d chroma_head_;
};

}  // namespace awm
