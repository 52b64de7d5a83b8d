// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "awmfuse/kernels.hpp"
#include "awmfuse/nn.hpp"

namespace awm {

struct BackboneConfig {
  std::vector<int> blocks_per_stage;  // odd length, mirrored around the bottleneck
  std::vector<int> channel_schedule;  // palindromic, same length
  int state_dim = 8;
  int se_reduction = 4;

  int stages() const { return static_cast<int>(blocks_per_stage.size()); }
  int downsamples() const { return (stages() - 1) / 2; }
  void validate() const;
};

/// Residual state-space block: channel layer norm, row-major spatial
/// flattening, per-channel selective scan, channel-attention reweighting
/// and a learnably scaled residual. With the scan and attention branches
/// at zero the block is the identity.
class Rssb {
 public:
  Rssb(nn::ParamStore& ps, const std::string& name, int channels,
       int state_dim, int se_reduction);
  ad::Value operator()(ad::Tape& t, ad::Value x) const;

 private:
  nn::LayerNorm norm_;
  nn::ParamStore::Entry* a_raw_;  // A = exp(-softplus(a_raw)) in (0,1)
  nn::ParamStore::Entry* b_;
  nn::ParamStore::Entry* c_;
  nn::ParamStore::Entry* d_;
  nn::SeBlock channel_attn_;
  nn::ParamStore::Entry* res_scale_;
};

/// Hook applied after each stage's RSSB stack; receives the stage index
/// (0-based, encoder to decoder). Return the input unchanged for a
/// pass-through.
using StageHook =
    std::function<ad::Value(ad::Tape&, ad::Value, int stage_index)>;

/// U-Net of RSSB stacks: encoder stages downsample x2 by strided conv,
/// the decoder mirrors with nearest-neighbor upsampling and skip
/// concatenation. Spatial size is preserved end to end; throws
/// IndivisibleSpatialSize unless 2^downsamples divides H and W.
class Unet {
 public:
  Unet(nn::ParamStore& ps, const BackboneConfig& cfg);
  ad::Value operator()(ad::Tape& t, ad::Value x,
                       const StageHook& hook = nullptr) const;
  const BackboneConfig& config() const { return cfg_; }

 private:
  BackboneConfig cfg_;
  std::vector<std::vector<Rssb>> stage_blocks_;
  std::vector<nn::Conv2d> down_;
  std::vector<nn::Conv2d> up_;
  std::vector<nn::Conv2d> skip_fuse_;
};

}  // namespace awm
