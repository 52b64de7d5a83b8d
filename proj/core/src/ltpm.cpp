// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/ltpm.hpp"

namespace awm {

Tensor affine_modulate(const Tensor& x, const Tensor& gamma,
                       const Tensor& beta) {
  if (x.rank() != 3) throw DimMismatch("affine_modulate expects [C,H,W]");
  const int c = x.dim(0);
  if (gamma.numel() != static_cast<std::size_t>(c) ||
      beta.numel() != static_cast<std::size_t>(c))
    throw DimMismatch("affine_modulate: gamma/beta must have C entries");
  Tensor out = x;
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  for (int ch = 0; ch < c; ++ch) {
    const double g = 1.0 + gamma[ch], b = beta[ch];
    double* p = out.data() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] = g * p[i] + b;
  }
  return out;
}

ad::Value DilatedPyramid::operator()(ad::Tape& t, ad::Value x) const {
  ad::Value p0 = branches[0](t, x);
  ad::Value p1 = branches[1](t, x);
  ad::Value p2 = branches[2](t, x);
  return fuse(t, ad::concat_ch(t, ad::concat_ch(t, p0, p1), p2));
}

DilatedPyramid make_dilated_pyramid(nn::ParamStore& ps,
                                    const std::string& name, int channels,
                                    std::array<int, 3> rates) {
  if (!(rates[0] < rates[1] && rates[1] < rates[2]) || rates[0] < 1)
    throw DimMismatch("dilated pyramid: rates must be strictly increasing");
  DilatedPyramid dp;
  dp.rates = rates;
  for (int i = 0; i < 3; ++i) {
    ad::ConvSpec spec;
    spec.dilation = rates[static_cast<std::size_t>(i)];
    spec.pad = rates[static_cast<std::size_t>(i)];  // same-padding for 3x3
    dp.branches[static_cast<std::size_t>(i)] =
        nn::make_conv2d(ps, name + ".d" + std::to_string(rates[i]), channels,
                        channels, 3, spec);
  }
  dp.fuse = nn::make_conv2d(ps, name + ".fuse", 3 * channels, channels, 1);
  return dp;
}

Ltpm::Ltpm(nn::ParamStore& ps, const std::string& name, const LtpmConfig& cfg)
    : cfg_(cfg) {
  se1_ = nn::make_se_block(ps, name + ".se1", cfg.channels, cfg.se_reduction);
  se2_ = nn::make_se_block(ps, name + ".se2", cfg.channels, cfg.se_reduction);
  mod_hidden_ = nn::make_linear(ps, name + ".mod.hidden", cfg.text_dim_global,
                                cfg.mod_hidden);
  mod_gamma_ = nn::make_linear(ps, name + ".mod.gamma", cfg.mod_hidden,
                               cfg.channels, true, nn::Init::kZero);
  mod_beta_ = nn::make_linear(ps, name + ".mod.beta", cfg.mod_hidden,
                              cfg.channels, true, nn::Init::kZero);
  attn_ = nn::make_cross_attention(ps, name + ".attn", cfg.text_dim_local,
                                   cfg.channels, cfg.attn_dim);
  pyramid_ = make_dilated_pyramid(ps, name + ".pyr", cfg.channels,
                                  cfg.dilation_rates);
}

ad::Value Ltpm::operator()(ad::Tape& t, ad::Value f,
                           const Tensor* clip_image_embedding,
                           const Tensor* detail_tokens) const {
  ad::Value cur = se2_(t, se1_(t, f));
  if (clip_image_embedding) {
    ad::Value hidden =
        ad::silu(t, mod_hidden_(t, t.constant(*clip_image_embedding)));
    ad::Value gamma = mod_gamma_(t, hidden);
    ad::Value beta = mod_beta_(t, hidden);
    cur = ad::add_bias_ch(t, ad::scale_ch(t, cur, ad::add_scalar(t, gamma, 1.0)),
                          beta);
  }
  if (detail_tokens) {
    if (detail_tokens->rank() != 2 ||
        detail_tokens->dim(1) != cfg_.text_dim_local)
      throw DimMismatch("ltpm: detail tokens must be [T," +
                        std::to_string(cfg_.text_dim_local) + "]");
    cur = attn_(t, t.constant(*detail_tokens), cur);
  }
  return pyramid_(t, cur);
}

}  // namespace awm
