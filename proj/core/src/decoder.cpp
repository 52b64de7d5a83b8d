// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/decoder.hpp"

namespace awm {

ad::Value WtConv::operator()(ad::Tape& t, ad::Value x) const {
  const int c = t.val(x).dim(0);
  // Analysis down to the coarsest level, keeping the detail slices.
  std::vector<std::array<ad::Value, 3>> details;
  ad::Value ll = x;
  for (int l = 0; l < levels; ++l) {
    ad::Value packed = ad::dwt_haar(t, ll);
    details.push_back({ad::slice_ch(t, packed, c, c),
                       ad::slice_ch(t, packed, 2 * c, c),
                       ad::slice_ch(t, packed, 3 * c, c)});
    ll = ad::slice_ch(t, packed, 0, c);
  }
  // Per-subband depthwise filtering.
  ll = ll_conv(t, ll);
  for (int l = 0; l < levels; ++l)
    for (int band = 0; band < 3; ++band)
      details[static_cast<std::size_t>(l)][static_cast<std::size_t>(band)] =
          detail_convs[static_cast<std::size_t>(l)]
                      [static_cast<std::size_t>(band)](
                          t, details[static_cast<std::size_t>(l)]
                                    [static_cast<std::size_t>(band)]);
  // Synthesis back to full resolution.
  for (int l = levels - 1; l >= 0; --l) {
    const auto& d = details[static_cast<std::size_t>(l)];
    ad::Value packed = ad::concat_ch(
        t, ad::concat_ch(t, ad::concat_ch(t, ll, d[0]), d[1]), d[2]);
    ll = ad::idwt_haar(t, packed);
  }
  return ad::add(t, ll, direct(t, x));
}

WtConv make_wtconv(nn::ParamStore& ps, const std::string& name, int channels,
                   int levels) {
  if (levels < 1) throw DimMismatch("wtconv: levels must be >= 1");
  WtConv wt;
  wt.levels = levels;
  ad::ConvSpec depthwise;
  depthwise.pad = 1;
  depthwise.groups = channels;
  static const char* kBand[3] = {"lh", "hl", "hh"};
  for (int l = 0; l < levels; ++l) {
    std::array<nn::Conv2d, 3> row;
    for (int band = 0; band < 3; ++band)
      row[static_cast<std::size_t>(band)] = nn::make_conv2d(
          ps, name + ".l" + std::to_string(l + 1) + "." + kBand[band],
          channels, channels, 3, depthwise);
    wt.detail_convs.push_back(row);
  }
  wt.ll_conv = nn::make_conv2d(ps, name + ".ll", channels, channels, 3,
                               depthwise);
  ad::ConvSpec full;
  full.pad = 1;
  wt.direct = nn::make_conv2d(ps, name + ".direct", channels, channels, 3,
                              full);
  return wt;
}

Decoder::Decoder(nn::ParamStore& ps, const DecoderConfig& cfg) : cfg_(cfg) {
  const int c = cfg.channels;
  trunk_ = make_wtconv(ps, "dec.trunk", c, cfg.wt_levels);
  luma_branch_ = make_wtconv(ps, "dec.luma", c, cfg.wt_levels);
  luma_head_ = nn::make_conv2d(ps, "dec.luma_head", c, 1, 1);
  chroma_in_ = nn::make_conv2d(ps, "dec.chroma_in", c + 2, c, 1);
  chroma_branch_ = make_wtconv(ps, "dec.chroma", c, cfg.wt_levels);
  chroma_head_ = nn::make_conv2d(ps, "dec.chroma_head", c, 2, 1);
}

ad::Value Decoder::rgb_node(ad::Tape& t, ad::Value features,
                            ad::Value chroma_source_rgb) const {
  ad::Value f = ad::silu(t, trunk_(t, features));
  ad::Value luma = ad::sigmoid(t, luma_head_(t, luma_branch_(t, f)));

  ad::Value src_ycc = ad::rgb_to_ycbcr_node(t, chroma_source_rgb);
  ad::Value src_cbcr = ad::slice_ch(t, src_ycc, 1, 2);
  ad::Value chroma_feat =
      ad::silu(t, chroma_in_(t, ad::concat_ch(t, f, src_cbcr)));
  ad::Value cbcr =
      ad::sigmoid(t, chroma_head_(t, chroma_branch_(t, chroma_feat)));

  ad::Value ycc = ad::concat_ch(t, luma, cbcr);
  return ad::ycbcr_to_rgb_node(t, ycc);
}

ImageRgb Decoder::decode(const Tensor& features,
                         const ImageRgb& chroma_source) const {
  ad::Tape t;
  ad::Value rgb =
      rgb_node(t, t.constant(features), t.constant(chroma_source.pixels));
  Tensor out = t.val(rgb);
  clamp01(out);
  return ImageRgb(std::move(out));
}

}  // namespace awm
