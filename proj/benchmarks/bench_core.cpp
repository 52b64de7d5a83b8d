// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "awmfuse/kernels.hpp"
#include "awmfuse/losses.hpp"
#include "awmfuse/metrics.hpp"
#include "awmfuse/model.hpp"
#include "awmfuse/weathersim.hpp"

namespace {

using namespace awm;

Tensor random_map(std::vector<int> shape, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor::uniform(std::move(shape), rng, -1.0, 1.0);
}

ImageRgb random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  ImageRgb img(h, w);
  for (double& v : img.pixels.vec()) v = rng.uniform();
  return img;
}

void SelectiveScan(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const int c = 32, n = 8;
  const Tensor x = random_map({l, c}, 1);
  Rng rng(2);
  const Tensor a = Tensor::uniform({c, n}, rng, 0.0, 0.95);
  const Tensor b = Tensor::uniform({c, n}, rng, -1.0, 1.0);
  const Tensor cm = Tensor::uniform({c, n}, rng, -1.0, 1.0);
  const Tensor d = Tensor::uniform({c}, rng, -1.0, 1.0);
  for (auto _ : state) {
    Tensor y = selective_scan_forward(x, a, b, cm, d);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * l * c);
}
BENCHMARK(SelectiveScan)->Arg(1024)->Arg(4096)->Arg(16384);

void Conv3x3(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Tensor x = random_map({16, size, size}, 3);
  const Tensor w = random_map({16, 16, 3, 3}, 4);
  const Tensor b = random_map({16}, 5);
  ad::ConvSpec spec;
  spec.pad = 1;
  for (auto _ : state) {
    ad::Tape t;
    ad::Value y =
        ad::conv2d(t, t.constant(x), t.constant(w), t.constant(b), spec);
    benchmark::DoNotOptimize(t.val(y).data());
  }
}
BENCHMARK(Conv3x3)->Arg(32)->Arg(64)->Arg(128);

void HaarRoundTrip(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Tensor x = random_map({8, size, size}, 6);
  for (auto _ : state) {
    Tensor rec = haar_synthesis_packed(haar_analysis_packed(x));
    benchmark::DoNotOptimize(rec.data());
  }
}
BENCHMARK(HaarRoundTrip)->Arg(64)->Arg(128)->Arg(256);

void CrossAttentionForward(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  nn::ParamStore ps(7);
  nn::CrossAttention attn = nn::make_cross_attention(ps, "a", 64, 32, 16);
  const Tensor feat = random_map({32, hw, hw}, 8);
  const Tensor text = random_map({16, 64}, 9);
  for (auto _ : state) {
    ad::Tape t;
    ad::Value y = attn(t, t.constant(text), t.constant(feat));
    benchmark::DoNotOptimize(t.val(y).data());
  }
}
BENCHMARK(CrossAttentionForward)->Arg(32)->Arg(64);

void DegradeHaze(benchmark::State& state) {
  const ImageRgb img = random_image(160, 160, 10);
  DegradationSpec spec{WeatherKind::kHaze, 0.6, 11};
  for (auto _ : state) {
    ImageRgb out = degrade(img, spec);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}
BENCHMARK(DegradeHaze);

void MetricSuite(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const ImageRgb vi = random_image(size, size, 12);
  const ImageRgb fused = random_image(size, size, 13);
  ImageGray ir(size, size);
  {
    Rng rng(14);
    for (double& v : ir.pixels.vec()) v = rng.uniform();
  }
  for (auto _ : state) {
    MetricReport r = evaluate(fused, vi, ir);
    benchmark::DoNotOptimize(&r);
  }
}
BENCHMARK(MetricSuite)->Arg(64)->Arg(160);

void SsimLoss(benchmark::State& state) {
  const ImageRgb a = random_image(160, 160, 15);
  const ImageRgb b = random_image(160, 160, 16);
  ImageGray ir(160, 160);
  {
    Rng rng(17);
    for (double& v : ir.pixels.vec()) v = rng.uniform();
  }
  for (auto _ : state) {
    const double loss = ssim_loss(a, b, ir);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(SsimLoss);

void ModelForward(benchmark::State& state) {
  ModelConfig cfg;
  cfg.channels = {8, 16, 8};
  cfg.blocks = {1, 1, 1};
  cfg.state_dim = 4;
  cfg.attn_dim = 8;
  cfg.mod_hidden = 16;
  cfg.text_dim_global = 32;
  cfg.text_dim_local = 32;
  AwmFuseModel model(cfg, 1);
  auto provider = stub_provider(32, 32, 2);
  const ImageRgb vi = random_image(64, 64, 18);
  ImageGray ir(64, 64);
  {
    Rng rng(19);
    for (double& v : ir.pixels.vec()) v = rng.uniform();
  }
  const Tensor caption = provider->encode_text_global("bench caption").vector;
  const Tensor detail = provider->encode_text_local("bench detail words").tokens;
  const Tensor clip = provider->encode_image(vi).vector;
  AwmFuseModel::TextInputs inputs;
  inputs.caption_embedding = &caption;
  inputs.detail_tokens = &detail;
  inputs.clip_image_embedding = &clip;
  for (auto _ : state) {
    ad::Tape t;
    ad::Value out = model.forward(t, t.constant(vi.pixels),
                                  t.constant(ir.pixels), inputs);
    benchmark::DoNotOptimize(t.val(out).data());
  }
}
BENCHMARK(ModelForward);

}  // namespace

BENCHMARK_MAIN();
