// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/backbone.hpp"

#include <cmath>

namespace awm {

void BackboneConfig::validate() const {
  const std::size_t n = blocks_per_stage.size();
  if (n == 0 || n % 2 == 0 || channel_schedule.size() != n)
    throw DimMismatch(
        "backbone config: blocks and channels need equal odd length");
  for (std::size_t i = 0; i < n; ++i) {
    if (blocks_per_stage[i] < 1 || channel_schedule[i] < 1)
      throw DimMismatch("backbone config: entries must be positive");
    if (channel_schedule[i] != channel_schedule[n - 1 - i])
      throw DimMismatch("backbone config: channel schedule not palindromic");
  }
  if (state_dim < 1) throw DimMismatch("backbone config: state_dim < 1");
}

Rssb::Rssb(nn::ParamStore& ps, const std::string& name, int channels,
           int state_dim, int se_reduction) {
  norm_ = nn::make_layer_norm(ps, name + ".norm", channels);
  // a_raw = -2.1972 puts the decay A = exp(-softplus(a_raw)) near 0.9.
  a_raw_ = ps.create(name + ".scan.a", {channels, state_dim}, "scan",
                     nn::Init::kConst, -2.1972245773362196);
  const double bound = 1.0 / std::sqrt(double(state_dim));
  b_ = ps.create(name + ".scan.b", {channels, state_dim}, "scan",
                 nn::Init::kUniformSym, bound);
  c_ = ps.create(name + ".scan.c", {channels, state_dim}, "scan",
                 nn::Init::kUniformSym, bound);
  d_ = ps.create(name + ".scan.d", {channels}, "scan", nn::Init::kOne);
  channel_attn_ = nn::make_se_block(ps, name + ".ca", channels, se_reduction);
  res_scale_ = ps.create(name + ".res_scale", {channels}, "scale",
                         nn::Init::kConst, 0.1);
}

ad::Value Rssb::operator()(ad::Tape& t, ad::Value x) const {
  const Tensor& xv = t.val(x);
  const int h = xv.dim(1), w = xv.dim(2);
  ad::Value normed = norm_(t, x);
  ad::Value seq = ad::flatten_hw(t, normed);
  ad::Value a = ad::exp_of(t, ad::neg_of(t, ad::softplus(t, use(t, a_raw_))));
  ad::Value scanned = ad::selective_scan(t, seq, a, use(t, b_), use(t, c_),
                                         use(t, d_));
  ad::Value spatial = ad::unflatten_hw(t, scanned, h, w);
  ad::Value gated = channel_attn_(t, spatial);
  return ad::add(t, x, ad::scale_ch(t, gated, use(t, res_scale_)));
}

Unet::Unet(nn::ParamStore& ps, const BackboneConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int stages = cfg_.stages();
  const int downs = cfg_.downsamples();
  const auto& ch = cfg_.channel_schedule;

  stage_blocks_.resize(static_cast<std::size_t>(stages));
  for (int s = 0; s < stages; ++s)
    for (int b = 0; b < cfg_.blocks_per_stage[static_cast<std::size_t>(s)]; ++b)
      stage_blocks_[static_cast<std::size_t>(s)].push_back(
          Rssb(ps, "unet.s" + std::to_string(s) + ".rssb" + std::to_string(b),
               ch[static_cast<std::size_t>(s)], cfg_.state_dim,
               cfg_.se_reduction));

  ad::ConvSpec down_spec;
  down_spec.stride = 2;
  down_spec.pad = 1;
  for (int i = 0; i < downs; ++i)
    down_.push_back(nn::make_conv2d(ps, "unet.down" + std::to_string(i),
                                    ch[static_cast<std::size_t>(i)],
                                    ch[static_cast<std::size_t>(i) + 1], 3,
                                    down_spec));
  ad::ConvSpec up_spec;
  up_spec.pad = 1;
  for (int j = downs + 1; j < stages; ++j) {
    up_.push_back(nn::make_conv2d(ps, "unet.up" + std::to_string(j),
                                  ch[static_cast<std::size_t>(j) - 1],
                                  ch[static_cast<std::size_t>(j)], 3, up_spec));
    skip_fuse_.push_back(nn::make_conv2d(
        ps, "unet.skip" + std::to_string(j),
        2 * ch[static_cast<std::size_t>(j)], ch[static_cast<std::size_t>(j)],
        1));
  }
}

ad::Value Unet::operator()(ad::Tape& t, ad::Value x,
                           const StageHook& hook) const {
  const Tensor& xv = t.val(x);
  const int downs = cfg_.downsamples();
  const int div = 1 << downs;
  if (xv.dim(1) % div != 0 || xv.dim(2) % div != 0)
    throw IndivisibleSpatialSize("unet: " + xv.shape_str() +
                                 " not divisible by " + std::to_string(div));
  if (xv.dim(0) != cfg_.channel_schedule.front())
    throw DimMismatch("unet: input channels " + std::to_string(xv.dim(0)) +
                      " != schedule start " +
                      std::to_string(cfg_.channel_schedule.front()));

  auto run_stage = [&](ad::Value v, int stage) {
    for (const Rssb& block : stage_blocks_[static_cast<std::size_t>(stage)])
      v = block(t, v);
    return hook ? hook(t, v, stage) : v;
  };

  std::vector<ad::Value> skips;
  ad::Value cur = x;
  for (int i = 0; i < downs; ++i) {
    cur = run_stage(cur, i);
    skips.push_back(cur);
    cur = down_[static_cast<std::size_t>(i)](t, cur);
  }
  cur = run_stage(cur, downs);
  const int stages = cfg_.stages();
  for (int j = downs + 1; j < stages; ++j) {
    const std::size_t k = static_cast<std::size_t>(j - downs - 1);
    cur = up_[k](t, ad::upsample_nearest2(t, cur));
    ad::Value skip = skips[static_cast<std::size_t>(stages - 1 - j)];
    cur = skip_fuse_[k](t, ad::concat_ch(t, cur, skip));
    cur = run_stage(cur, j);
  }
  return cur;
}

}  // namespace awm
