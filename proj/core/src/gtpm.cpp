// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/gtpm.hpp"

namespace awm {

std::pair<Tensor, Tensor> split_halves(const Tensor& f) {
  if (f.rank() != 3) throw ShapeMismatch("split_halves expects [C,H,W]");
  if (f.dim(0) % 2 != 0)
    throw OddChannelCount("split_halves: odd channel count " +
                          std::to_string(f.dim(0)));
  ad::Tape t;
  ad::Value x = t.constant(f);
  const int half = f.dim(0) / 2;
  return {t.val(ad::slice_ch(t, x, 0, half)),
          t.val(ad::slice_ch(t, x, half, half))};
}

Tensor fuse_left(const Tensor& vi_l, const Tensor& ir_l) {
  ad::Tape t;
  return t.val(ad::concat_ch(t, t.constant(vi_l), t.constant(ir_l)));
}

Tensor fuse_right(const Tensor& vi_r, const Tensor& ir_r) {
  ad::Tape t;
  return t.val(
      ad::maxpool3x3(t, ad::concat_ch(t, t.constant(vi_r), t.constant(ir_r))));
}

Gtpm::Gtpm(nn::ParamStore& ps, const GtpmConfig& cfg) : cfg_(cfg) {
  if (cfg.base_channels < 2 || cfg.base_channels % 2 != 0)
    throw OddChannelCount("gtpm: base_channels must be even and >= 2");
  const int c0 = cfg.base_channels;
  expand_vi_ = nn::make_conv2d(ps, "gtpm.expand_vi", 3, c0, 1);
  expand_ir_ = nn::make_conv2d(ps, "gtpm.expand_ir", 1, c0, 1);
  res_left_ = nn::make_residual_block(ps, "gtpm.res_left", c0);
  res_right_ = nn::make_residual_block(ps, "gtpm.res_right", c0);
  merge_ = nn::make_conv2d(ps, "gtpm.merge", 2 * c0, c0, 1);
  if (cfg.text_enabled) {
    clip_proj_ = nn::make_linear(ps, "gtpm.clip_proj", cfg.text_dim, c0);
    attn_ = nn::make_cross_attention(ps, "gtpm.attn", cfg.text_dim, c0,
                                     cfg.attn_dim);
  }
}

ad::Value Gtpm::operator()(ad::Tape& t, ad::Value vi, ad::Value ir,
                           const Tensor* caption_embedding,
                           const Tensor* clip_image_embedding) const {
  const Tensor& vv = t.val(vi);
  const Tensor& iv = t.val(ir);
  if (vv.dim(1) != iv.dim(1) || vv.dim(2) != iv.dim(2))
    throw ShapeMismatch("gtpm: unregistered pair " + vv.shape_str() + " vs " +
                        iv.shape_str());
  const int half = cfg_.base_channels / 2;

  ad::Value evi = expand_vi_(t, vi);
  ad::Value eir = expand_ir_(t, ir);
  ad::Value vi_l = ad::slice_ch(t, evi, 0, half);
  ad::Value vi_r = ad::slice_ch(t, evi, half, half);
  ad::Value ir_l = ad::slice_ch(t, eir, 0, half);
  ad::Value ir_r = ad::slice_ch(t, eir, half, half);

  ad::Value left = ad::concat_ch(t, vi_l, ir_l);
  ad::Value right = ad::maxpool3x3(t, ad::concat_ch(t, vi_r, ir_r));
  left = res_left_(t, left);
  right = res_right_(t, right);
  ad::Value merged = merge_(t, ad::concat_ch(t, left, right));

  if (cfg_.text_enabled && clip_image_embedding) {
    ad::Value proj = clip_proj_(t, t.constant(*clip_image_embedding));
    merged = ad::add_bias_ch(t, merged, proj);
  }
  if (cfg_.text_enabled && caption_embedding) {
    ad::Value tokens = t.constant(
        caption_embedding->reshaped({1, static_cast<int>(caption_embedding->numel())}));
    merged = attn_(t, tokens, merged);
  }
  return merged;
}

Tensor Gtpm::forward(const ImageRgb& vi, const ImageGray& ir,
                     const Tensor* caption_embedding,
                     const Tensor* clip_image_embedding) const {
  ad::Tape t;
  return t.val((*this)(t, t.constant(vi.pixels), t.constant(ir.pixels),
                       caption_embedding, clip_image_embedding));
}

}  // namespace awm
