// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/nn.hpp"

#include <cmath>

namespace awm::nn {

ParamStore::Entry* ParamStore::create(const std::string& name,
                                      std::vector<int> shape,
                                      const std::string& kind, Init init,
                                      double arg) {
  if (index_.count(name))
    throw Error("duplicate parameter name: " + name);
  Entry e;
  e.name = name;
  e.kind = kind;
  switch (init) {
    case Init::kZero:
      e.value = Tensor(shape);
      break;
    case Init::kOne:
      e.value = Tensor::full(shape, 1.0);
      break;
    case Init::kConst:
      e.value = Tensor::full(shape, arg);
      break;
    case Init::kFanInUniform: {
      const double bound = 1.0 / std::sqrt(std::max(arg, 1.0));
      e.value = Tensor::uniform(shape, rng_, -bound, bound);
      break;
    }
    case Init::kUniformSym:
      e.value = Tensor::uniform(shape, rng_, -arg, arg);
      break;
  }
  e.grad = Tensor(std::move(shape));
  entries_.push_back(std::move(e));
  Entry* ptr = &entries_.back();
  index_[name] = ptr;
  return ptr;
}

ParamStore::Entry* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

void ParamStore::zero_grads() {
  for (Entry& e : entries_) e.grad.fill(0.0);
}

std::size_t ParamStore::total_params() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.value.numel();
  return n;
}

std::size_t ParamStore::params_of_kind(const std::string& kind) const {
  std::size_t n = 0;
  for (const Entry& e : entries_)
    if (e.kind == kind) n += e.value.numel();
  return n;
}

bool ParamStore::grads_finite() const {
  for (const Entry& e : entries_)
    if (!e.grad.all_finite()) return false;
  return true;
}

// ---- layers ----------------------------------------------------------------

ad::Value Conv2d::operator()(ad::Tape& t, ad::Value x) const {
  return ad::conv2d(t, x, use(t, w), b ? use(t, b) : ad::Value{}, spec);
}

Conv2d make_conv2d(ParamStore& ps, const std::string& name, int cin, int cout,
                   int k, ad::ConvSpec spec, bool bias) {
  if (cin % spec.groups != 0 || cout % spec.groups != 0)
    throw DimMismatch("conv " + name + ": groups must divide channels");
  Conv2d layer;
  const int cpg = cin / spec.groups;
  layer.w = ps.create(name + ".w", {cout, cpg, k, k}, "conv",
                      Init::kFanInUniform, double(cpg) * k * k);
  if (bias) layer.b = ps.create(name + ".b", {cout}, "conv", Init::kZero);
  layer.spec = spec;
  return layer;
}

ad::Value Linear::operator()(ad::Tape& t, ad::Value x) const {
  return ad::linear(t, x, use(t, w), b ? use(t, b) : ad::Value{});
}

Linear make_linear(ParamStore& ps, const std::string& name, int in, int out,
                   bool bias, Init weight_init) {
  Linear layer;
  layer.w = ps.create(name + ".w", {out, in}, "linear", weight_init,
                      weight_init == Init::kFanInUniform ? double(in) : 0.0);
  if (bias) layer.b = ps.create(name + ".b", {out}, "linear", Init::kZero);
  return layer;
}

ad::Value LayerNorm::operator()(ad::Tape& t, ad::Value x) const {
  return ad::layer_norm_chw(t, x, use(t, gamma), use(t, beta));
}

LayerNorm make_layer_norm(ParamStore& ps, const std::string& name,
                          int channels) {
  LayerNorm layer;
  layer.gamma = ps.create(name + ".gamma", {channels}, "norm", Init::kOne);
  layer.beta = ps.create(name + ".beta", {channels}, "norm", Init::kZero);
  return layer;
}

ad::Value SeBlock::gate(ad::Tape& t, ad::Value x) const {
  ad::Value squeezed = ad::global_avg_pool(t, x);
  ad::Value hidden = ad::silu(t, fc1(t, squeezed));
  return ad::sigmoid(t, fc2(t, hidden));
}

ad::Value SeBlock::operator()(ad::Tape& t, ad::Value x) const {
  return ad::scale_ch(t, x, gate(t, x));
}

SeBlock make_se_block(ParamStore& ps, const std::string& name, int channels,
                      int reduction) {
  if (reduction < 1 || channels % reduction != 0)
    throw BadReduction("se block " + name + ": reduction " +
                       std::to_string(reduction) + " does not divide " +
                       std::to_string(channels) + " channels");
  SeBlock se;
  se.fc1 = make_linear(ps, name + ".fc1", channels, channels / reduction);
  se.fc2 = make_linear(ps, name + ".fc2", channels / reduction, channels);
  return se;
}

ad::Value ResidualConvBlock::operator()(ad::Tape& t, ad::Value x) const {
  return ad::add(t, x, c2(t, ad::silu(t, c1(t, x))));
}

ResidualConvBlock make_residual_block(ParamStore& ps, const std::string& name,
                                      int channels) {
  ResidualConvBlock block;
  ad::ConvSpec spec;
  spec.pad = 1;
  block.c1 = make_conv2d(ps, name + ".c1", channels, channels, 3, spec);
  block.c2 = make_conv2d(ps, name + ".c2", channels, channels, 3, spec);
  return block;
}

namespace {

ad::Value normalized_kv(ad::Tape& t, const CrossAttention& ca, ad::Value feat) {
  ad::Value normed = ca.kv_norm(t, feat);
  return ad::flatten_hw(t, normed);
}

}  // namespace

ad::Value CrossAttention::attention_weights(ad::Tape& t, ad::Value text_tokens,
                                            ad::Value feat) const {
  ad::Value x = normalized_kv(t, *this, feat);
  ad::Value q = wq(t, text_tokens);
  ad::Value k = wk(t, x);
  ad::Value scores =
      ad::scale(t, ad::matmul_nt(t, q, k), 1.0 / std::sqrt(double(attn_dim)));
  return ad::softmax_rows(t, scores);
}

ad::Value CrossAttention::operator()(ad::Tape& t, ad::Value text_tokens,
                                     ad::Value feat) const {
  const Tensor& tv = t.val(text_tokens);
  if (tv.rank() != 2) throw DimMismatch("cross attention: tokens must be [T,D]");
  ad::Value x = normalized_kv(t, *this, feat);
  ad::Value q = wq(t, text_tokens);
  ad::Value k = wk(t, x);
  ad::Value v = wv(t, x);
  ad::Value scores =
      ad::scale(t, ad::matmul_nt(t, q, k), 1.0 / std::sqrt(double(attn_dim)));
  ad::Value probs = ad::softmax_rows(t, scores);
  ad::Value readout = ad::matmul(t, probs, v);          // [T, attn_dim]
  ad::Value pooled = ad::mean_rows(t, readout);         // [attn_dim]
  ad::Value injected = wo(t, pooled);                   // [C]
  return ad::add_bias_ch(t, feat, injected);
}

CrossAttention make_cross_attention(ParamStore& ps, const std::string& name,
                                    int text_dim, int channels, int attn_dim) {
  CrossAttention ca;
  ca.kv_norm = make_layer_norm(ps, name + ".kv_norm", channels);
  ca.wq = make_linear(ps, name + ".wq", text_dim, attn_dim, /*bias=*/false);
  ca.wk = make_linear(ps, name + ".wk", channels, attn_dim, /*bias=*/false);
  ca.wv = make_linear(ps, name + ".wv", channels, attn_dim, /*bias=*/false);
  ca.wo = make_linear(ps, name + ".wo", attn_dim, channels);
  ca.attn_dim = attn_dim;
  return ca;
}

}  // namespace awm::nn
