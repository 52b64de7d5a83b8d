// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "awmfuse/trainer.hpp"
#include "test_util.hpp"

using namespace awm;

namespace {

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.crop = 16;
  cfg.batch = 2;
  cfg.lr = 1e-3;
  cfg.epochs = 4;
  cfg.seed = 5;
  cfg.model.channels = {4, 8, 4};
  cfg.model.blocks = {1, 1, 1};
  cfg.model.state_dim = 3;
  cfg.model.se_reduction = 4;
  cfg.model.attn_dim = 6;
  cfg.model.mod_hidden = 8;
  cfg.model.wt_levels = 2;
  cfg.model.text_dim_global = 16;
  cfg.model.text_dim_local = 16;
  cfg.provider_seed = 3;
  return cfg;
}

std::vector<TrainSample> toy_dataset(int count, int size = 24) {
  std::vector<TrainSample> samples;
  for (int i = 0; i < count; ++i) {
    TrainSample s;
    const ImageRgb clean = testutil::synth_scene(size, size, 100 + i);
    const ImageGray clean_ir(luminance(clean));
    DegradationSpec spec{WeatherKind::kHaze, 0.55, 40u + i};
    s.pair.id = "toy_" + std::to_string(i);
    s.pair.visible = degrade(clean, spec);
    s.pair.infrared = clean_ir;
    s.pair.clean_visible = clean;
    s.pair.clean_infrared = clean_ir;
    s.bundle.image_id = s.pair.id;
    s.bundle.caption = "a toy scene degraded by haze " + std::to_string(i);
    s.bundle.detail = "soft fog lowers contrast across the toy scene number " +
                      std::to_string(i) + " while edges fade";
    s.bundle.clean_description =
        "a clear toy scene number " + std::to_string(i);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace

TEST_CASE("train config kv round trip preserves the hash") {
  TrainConfig cfg = toy_config();
  cfg.text_mode = TextMode::kReduced;
  cfg.detail_text = DetailTextMode::kCaption;
  cfg.vlm_loss_enabled = false;
  cfg.lr = 0.00125;
  const TrainConfig back = TrainConfig::from_kv(cfg.to_kv());
  CHECK(back.hash() == cfg.hash());
  CHECK(back.lr == cfg.lr);
  CHECK(back.text_mode == TextMode::kReduced);
  CHECK(back.detail_text == DetailTextMode::kCaption);
  CHECK_FALSE(back.vlm_loss_enabled);
  CHECK(back.model.channels == cfg.model.channels);

  CHECK_THROWS_AS(TrainConfig::from_kv({{"unknown_key", "1"}}), Error);

  const auto kv = parse_kv_string("crop = 32 # comment\n\nbatch=1\n");
  CHECK(kv.at("crop") == "32");
  CHECK(kv.at("batch") == "1");
  CHECK_THROWS_AS(parse_kv_string("not a pair\n"), Error);
}

TEST_CASE("training runs deterministically and decreases the toy loss") {
  const TrainConfig cfg = toy_config();
  const auto data = toy_dataset(4);
  auto provider = make_provider(cfg, &data);

  Trainer a(cfg, provider);
  Trainer b(cfg, provider);
  const LossReport first_a = a.train_step(data);
  const LossReport first_b = b.train_step(data);
  CHECK(first_a.total == first_b.total);  // bit-identical scheduling

  // A short run should already reduce the loss on this 4-sample set.
  TrainConfig run_cfg = cfg;
  run_cfg.max_steps = 40;
  run_cfg.epochs = 1000;
  Trainer t(run_cfg, provider);
  const TrainResult result = t.train(data);
  CHECK(result.steps == 40);
  REQUIRE(result.history.size() >= 2);
  const double initial = result.history.front().mean.total;
  const double final = result.history.back().mean.total;
  CHECK(final < initial);
  CHECK(std::isfinite(final));
  const std::string csv = loss_history_csv(result.history);
  CHECK(csv.rfind("epoch,vlm,color,l1,ssim,total\n", 0) == 0);
}

TEST_CASE("ablation toggles still train") {
  TrainConfig cfg = toy_config();
  cfg.model.gtpm_text_enabled = false;
  cfg.model.ltpm_enabled = false;
  cfg.vlm_loss_enabled = false;
  cfg.max_steps = 60;
  cfg.epochs = 1000;
  const auto data = toy_dataset(2);
  auto provider = make_provider(cfg, &data);
  Trainer t(cfg, provider);
  const TrainResult result = t.train(data);
  CHECK(result.steps == 60);
  CHECK(result.history.back().mean.vlm == 0.0);
  CHECK(result.history.back().mean.total <
        result.history.front().mean.total);
}

TEST_CASE("checkpoint round trip is bit exact and resume continues the trajectory") {
  const TrainConfig cfg = toy_config();
  const auto data = toy_dataset(4);
  auto provider = make_provider(cfg, &data);
  testutil::TempDir dir("ckpt");

  Trainer t(cfg, provider);
  for (int i = 0; i < 3; ++i) t.train_step(data);
  const std::string path = dir.file("model.ckpt");
  t.save_checkpoint(path);

  // Bit-exact parameter restore.
  Trainer fresh(cfg, provider);
  fresh.restore_checkpoint(path);
  const auto& saved = t.model().params().entries();
  const auto& loaded = fresh.model().params().entries();
  REQUIRE(saved.size() == loaded.size());
  auto it_saved = saved.begin();
  auto it_loaded = loaded.begin();
  for (; it_saved != saved.end(); ++it_saved, ++it_loaded) {
    CHECK(it_saved->name == it_loaded->name);
    CHECK(it_saved->value.vec() == it_loaded->value.vec());
  }
  CHECK(fresh.step() == 3);

  // The next step after resume matches the uninterrupted run.
  const LossReport uninterrupted = t.train_step(data);
  const LossReport resumed = fresh.train_step(data);
  CHECK(std::fabs(uninterrupted.total - resumed.total) <= 1e-6);

  // Config mismatch is rejected.
  TrainConfig other = cfg;
  other.lr = 0.5;
  Trainer wrong(other, provider);
  CHECK_THROWS_AS(wrong.restore_checkpoint(path), Error);

  // trainer_from_checkpoint reconstructs config and state.
  auto restored = trainer_from_checkpoint(path, provider);
  CHECK(restored->step() == 3);
  CHECK(restored->config().hash() == cfg.hash());
}

TEST_CASE("non-finite parameters abort with DivergedLoss") {
  const TrainConfig cfg = toy_config();
  const auto data = toy_dataset(2);
  auto provider = make_provider(cfg, &data);
  Trainer t(cfg, provider);
  t.model().params().entries().front().value[0] =
      std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(t.train_step(data), DivergedLoss);
}

TEST_CASE("empty dataset is rejected") {
  const TrainConfig cfg = toy_config();
  auto provider = make_provider(cfg, nullptr);
  Trainer t(cfg, provider);
  std::vector<TrainSample> none;
  CHECK_THROWS_AS(t.train(none), EmptyDataset);
}

TEST_CASE("fusion output: shape, determinism, misleading-text robustness") {
  const TrainConfig cfg = toy_config();
  const auto data = toy_dataset(2, 20);  // 20x20: exercises pad + crop
  auto provider = make_provider(cfg, &data);
  Trainer t(cfg, provider);
  t.train_step(data);

  const ImageRgb fused =
      fuse_image(t.model(), cfg, data[0].pair, data[0].bundle, *provider);
  CHECK(fused.pixels.shape() == std::vector<int>{3, 20, 20});
  CHECK(fused.pixels.min() >= 0.0);
  CHECK(fused.pixels.max() <= 1.0);

  const ImageRgb again =
      fuse_image(t.model(), cfg, data[0].pair, data[0].bundle, *provider);
  CHECK(fused.pixels.vec() == again.pixels.vec());

  // Misleading temporal cue: still a finite, valid image.
  TextBundle misleading = data[0].bundle;
  misleading.caption = "a bright daytime scene in clear summer sun";
  misleading.detail = "strong daylight floods the scene at noon";
  const ImageRgb biased =
      fuse_image(t.model(), cfg, data[0].pair, misleading, *provider);
  CHECK(biased.pixels.all_finite());
  CHECK(biased.pixels.min() >= 0.0);
  CHECK(biased.pixels.max() <= 1.0);
  CHECK(biased.pixels.vec() != fused.pixels.vec());
}

TEST_CASE("model summary: invariance and channel-doubling ratio") {
  TrainConfig cfg = toy_config();
  const ModelSummary s16 = model_summary(cfg.model, 16, 16);
  const ModelSummary s32 = model_summary(cfg.model, 32, 32);
  CHECK(s16.param_count == s32.param_count);
  CHECK(s16.conv_param_count == s32.conv_param_count);
  CHECK(s32.flops_estimate > s16.flops_estimate);
  CHECK(s16.flops_estimate > 0.0);

  ModelConfig narrow = cfg.model;
  narrow.channels = {8, 16, 8};
  ModelConfig wide = cfg.model;
  wide.channels = {16, 32, 16};
  wide.se_reduction = 4;
  const double ratio =
      double(model_summary(wide, 16, 16).conv_param_count) /
      double(model_summary(narrow, 16, 16).conv_param_count);
  CHECK(ratio > 3.0);
  CHECK(ratio < 4.5);
}

TEST_CASE("provider mismatch with the model config is rejected") {
  const TrainConfig cfg = toy_config();
  auto wrong = stub_provider(32, 32, 1);
  CHECK_THROWS_AS(Trainer(cfg, wrong), ProviderError);
}
