// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/model.hpp"

#include <sstream>

namespace awm {

int ModelConfig::spatial_multiple() const {
  return 1 << std::max(downsamples(), wt_levels);
}

void ModelConfig::validate() const {
  BackboneConfig bc{blocks, channels, state_dim, se_reduction};
  bc.validate();
  if (channels.front() % 2 != 0)
    throw OddChannelCount("model config: base channel count must be even");
  if (attn_dim < 1 || mod_hidden < 1 || wt_levels < 1)
    throw DimMismatch("model config: invalid dimensions");
  if (text_dim_global < 1 || text_dim_local < 1)
    throw DimMismatch("model config: invalid text dims");
}

std::string ModelConfig::canonical_string() const {
  std::ostringstream os;
  auto list = [&os](const char* key, const std::vector<int>& v) {
    os << key << '=';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ';';
  };
  list("channels", channels);
  list("blocks", blocks);
  os << "state_dim=" << state_dim << ";se=" << se_reduction
     << ";attn=" << attn_dim << ";mod=" << mod_hidden
     << ";wt=" << wt_levels << ";dil=" << dilation_rates[0] << ','
     << dilation_rates[1] << ',' << dilation_rates[2]
     << ";dg=" << text_dim_global << ";dl=" << text_dim_local
     << ";gtpm_text=" << (gtpm_text_enabled ? 1 : 0)
     << ";ltpm=" << (ltpm_enabled ? 1 : 0);
  return os.str();
}

std::uint64_t ModelConfig::hash() const { return fnv1a64(canonical_string()); }

AwmFuseModel::AwmFuseModel(const ModelConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg), params_(init_seed) {
  cfg_.validate();

  GtpmConfig gc;
  gc.base_channels = cfg_.channels.front();
  gc.attn_dim = cfg_.attn_dim;
  gc.text_dim = cfg_.text_dim_global;
  gc.text_enabled = cfg_.gtpm_text_enabled;
  gtpm_.emplace(params_, gc);

  BackboneConfig bc{cfg_.blocks, cfg_.channels, cfg_.state_dim,
                    cfg_.se_reduction};
  unet_.emplace(params_, bc);

  if (cfg_.ltpm_enabled) {
    LtpmConfig mid;
    mid.channels = cfg_.channels[static_cast<std::size_t>(cfg_.downsamples())];
    mid.text_dim_global = cfg_.text_dim_global;
    mid.text_dim_local = cfg_.text_dim_local;
    mid.attn_dim = cfg_.attn_dim;
    mid.se_reduction = cfg_.se_reduction;
    mid.mod_hidden = cfg_.mod_hidden;
    mid.dilation_rates = cfg_.dilation_rates;
    ltpm_mid_.emplace(params_, "ltpm.mid", mid);

    LtpmConfig out = mid;
    out.channels = cfg_.channels.front();
    ltpm_out_.emplace(params_, "ltpm.out", out);
  }

  DecoderConfig dc;
  dc.channels = cfg_.channels.front();
  dc.wt_levels = cfg_.wt_levels;
  decoder_.emplace(params_, dc);
}

ad::Value AwmFuseModel::forward(ad::Tape& t, ad::Value vi, ad::Value ir,
                                const TextInputs& text) const {
  const Tensor& vv = t.val(vi);
  const int mult = cfg_.spatial_multiple();
  if (vv.dim(1) % mult != 0 || vv.dim(2) % mult != 0)
    throw IndivisibleSpatialSize("model: input " + vv.shape_str() +
                                 " not divisible by " + std::to_string(mult));

  ad::Value features = (*gtpm_)(t, vi, ir, text.caption_embedding,
                                text.clip_image_embedding);

  StageHook hook;
  if (cfg_.ltpm_enabled) {
    const int bottleneck = cfg_.downsamples();
    const int last = static_cast<int>(cfg_.channels.size()) - 1;
    hook = [this, &text, bottleneck, last](ad::Tape& t, ad::Value v,
                                           int stage) {
      if (stage == bottleneck)
        return (*ltpm_mid_)(t, v, text.clip_image_embedding,
                            text.detail_tokens);
      if (stage == last)
        return (*ltpm_out_)(t, v, text.clip_image_embedding,
                            text.detail_tokens);
      return v;
    };
  }
  ad::Value trunk = (*unet_)(t, features, hook);
  return decoder_->rgb_node(t, trunk, vi);
}

ImageRgb AwmFuseModel::fuse_pair(const ImagePair& pair,
                                 const TextInputs& text) const {
  const int h = pair.visible.height(), w = pair.visible.width();
  if (pair.infrared.height() != h || pair.infrared.width() != w)
    throw ShapeMismatch("fuse: pair not registered");
  const int mult = cfg_.spatial_multiple();
  Tensor vi = pad_to_multiple_reflect(pair.visible.pixels, mult);
  Tensor ir = pad_to_multiple_reflect(pair.infrared.pixels, mult);

  ad::Tape t;
  ad::Value rgb = forward(t, t.constant(std::move(vi)),
                          t.constant(std::move(ir)), text);
  Tensor out = t.val(rgb);
  if (out.dim(1) != h || out.dim(2) != w) out = crop(out, 0, 0, h, w);
  clamp01(out);
  return ImageRgb(std::move(out));
}

namespace {

// Multiply-accumulate accounting, x2 to approximate FLOPs.
struct FlopCounter {
  double total = 0.0;
  void conv(int cin, int cout, int k, int h, int w, int groups = 1) {
    total += 2.0 * h * w * cout * (double(cin) / groups) * k * k;
  }
  void linear(int rows, int in, int out) { total += 2.0 * rows * in * out; }
  void scan(int l, int c, int n) { total += 2.0 * l * c * (3.0 * n + 1.0); }
  void norm(int c, int h, int w) { total += 8.0 * c * h * w; }
  void dwt(int c, int h, int w) { total += 8.0 * c * h * w; }
  void attention(int tokens, int positions, int c, int text_dim, int d) {
    linear(positions, c, d);  // keys
    linear(positions, c, d);  // values
    linear(tokens, text_dim, d);
    total += 2.0 * tokens * positions * d * 2.0;  // scores + readout
    linear(1, d, c);
  }
  void se(int c, int r) {
    linear(1, c, c / r);
    linear(1, c / r, c);
    total += 2.0 * c;
  }
};

}  // namespace

ModelSummary AwmFuseModel::summary(int h, int w) const {
  ModelSummary s;
  s.param_count = params_.total_params();
  s.conv_param_count = params_.params_of_kind("conv");

  FlopCounter f;
  const auto& ch = cfg_.channels;
  const int c0 = ch.front();
  const int downs = cfg_.downsamples();
  const int stages = static_cast<int>(ch.size());
  const int tokens = 16;  // representative detail length

  // GTPM
  f.conv(3, c0, 1, h, w);
  f.conv(1, c0, 1, h, w);
  for (int i = 0; i < 4; ++i) f.conv(c0, c0, 3, h, w);  // two residual blocks
  f.conv(2 * c0, c0, 1, h, w);
  if (cfg_.gtpm_text_enabled) {
    f.linear(1, cfg_.text_dim_global, c0);
    f.attention(1, h * w, c0, cfg_.text_dim_global, cfg_.attn_dim);
  }

  // U-Net
  auto rssb_flops = [&](int c, int hh, int ww) {
    f.norm(c, hh, ww);
    f.scan(hh * ww, c, cfg_.state_dim);
    f.se(c, cfg_.se_reduction);
    f.total += 2.0 * c * hh * ww;  // residual scale + add
  };
  auto ltpm_flops = [&](int c, int hh, int ww) {
    f.se(c, cfg_.se_reduction);
    f.se(c, cfg_.se_reduction);
    f.linear(1, cfg_.text_dim_global, cfg_.mod_hidden);
    f.linear(1, cfg_.mod_hidden, 2 * c);
    f.attention(tokens, hh * ww, c, cfg_.text_dim_local, cfg_.attn_dim);
    for (int r = 0; r < 3; ++r) f.conv(c, c, 3, hh, ww);
    f.conv(3 * c, c, 1, hh, ww);
  };
  int hh = h, ww = w;
  for (int stage = 0; stage < stages; ++stage) {
    const int c = ch[static_cast<std::size_t>(stage)];
    for (int b = 0; b < cfg_.blocks[static_cast<std::size_t>(stage)]; ++b)
      rssb_flops(c, hh, ww);
    if (cfg_.ltpm_enabled && (stage == downs || stage == stages - 1))
      ltpm_flops(c, hh, ww);
    if (stage < downs) {
      f.conv(c, ch[static_cast<std::size_t>(stage) + 1], 3, hh / 2, ww / 2);
      hh /= 2;
      ww /= 2;
    } else if (stage >= downs && stage + 1 < stages) {
      hh *= 2;
      ww *= 2;
      f.conv(c, ch[static_cast<std::size_t>(stage) + 1], 3, hh, ww);
      f.conv(2 * ch[static_cast<std::size_t>(stage) + 1],
             ch[static_cast<std::size_t>(stage) + 1], 1, hh, ww);
    }
  }

  // Decoder: three WTConv units plus heads.
  auto wtconv_flops = [&](int c) {
    int lh = h, lw = w;
    for (int l = 0; l < cfg_.wt_levels; ++l) {
      f.dwt(c, lh, lw);
      lh /= 2;
      lw /= 2;
      for (int band = 0; band < 3; ++band) f.conv(c, c, 3, lh, lw, c);
    }
    f.conv(c, c, 3, lh, lw, c);  // LL conv at the coarsest level
    f.conv(c, c, 3, h, w);       // direct path
  };
  wtconv_flops(c0);
  wtconv_flops(c0);
  f.conv(c0, 1, 1, h, w);
  f.conv(c0 + 2, c0, 1, h, w);
  wtconv_flops(c0);
  f.conv(c0, 2, 1, h, w);

  s.flops_estimate = f.total;
  return s;
}

ModelSummary model_summary(const ModelConfig& cfg, int h, int w) {
  AwmFuseModel model(cfg, /*init_seed=*/0);
  return model.summary(h, w);
}

}  // namespace awm
