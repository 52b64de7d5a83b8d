// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0
//
// awmfuse — batch driver for the fusion pipeline:
//   degrade   build a synthetic adverse-weather dataset from clean images
//   train     train a fusion model on a dataset manifest
//   fuse      fuse one visible/infrared pair with a trained checkpoint
//   evaluate  score fused images against their sources (CSV report)

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "awmfuse/image_io.hpp"
#include "awmfuse/metrics.hpp"
#include "awmfuse/trainer.hpp"

namespace {

namespace fs = std::filesystem;

// fuse exit codes: 1 = I/O or internal, 2 = shape mismatch, 3 = sidecar
// missing or malformed.
constexpr int kExitError = 1;
constexpr int kExitShape = 2;
constexpr int kExitSidecar = 3;

std::shared_ptr<awm::EmbeddingProvider> maybe_cache(
    std::shared_ptr<awm::EmbeddingProvider> provider) {
  const char* root = std::getenv("AWMFUSE_CACHE_DIR");
  if (!root || !*root) return provider;
  return awm::embedding_cache(std::move(provider), root);
}

int cmd_degrade(const std::string& clean_dir, const std::string& out_dir,
                int per_type, std::uint64_t seed, bool degrade_ir) {
  const awm::DatasetManifest manifest =
      awm::build_dataset(clean_dir, out_dir, per_type, seed, degrade_ir);
  std::cout << "wrote " << manifest.entries.size() << " pairs under "
            << out_dir << "\n";
  return 0;
}

int cmd_train(const std::map<std::string, std::string>& kv,
              const std::string& manifest_path,
              const std::string& checkpoint_path, std::string loss_csv_path) {
  const awm::TrainConfig cfg = awm::TrainConfig::from_kv(kv);
  const awm::DatasetManifest manifest = awm::load_manifest(manifest_path);

  auto budget_probe = std::make_shared<awm::StubProvider>(
      cfg.model.text_dim_global, cfg.model.text_dim_local, cfg.provider_seed);
  const std::vector<awm::TrainSample> samples =
      awm::load_training_set(manifest, budget_probe.get());
  auto provider = maybe_cache(awm::make_provider(cfg, &samples));

  {
    double clean_tokens = 0.0, trained_tokens = 0.0;
    awm::CorruptOptions copts;
    copts.max_tokens = provider->max_tokens();
    for (const awm::TrainSample& s : samples) {
      clean_tokens += awm::count_tokens(s.bundle.detail);
      trained_tokens += awm::count_tokens(
          awm::corrupt_text(s.bundle, cfg.text_mode, cfg.seed, copts).detail);
    }
    clean_tokens /= double(samples.size());
    trained_tokens /= double(samples.size());
    std::cout << "detail tokens: clean mean " << clean_tokens << ", as trained ("
              << awm::to_string(cfg.text_mode) << ") mean " << trained_tokens
              << "\n";
  }

  awm::Trainer trainer(cfg, provider);
  const awm::TrainResult result = trainer.train(samples);
  trainer.save_checkpoint(checkpoint_path);

  if (loss_csv_path.empty()) loss_csv_path = checkpoint_path + ".loss.csv";
  std::ofstream csv(loss_csv_path, std::ios::trunc);
  if (!csv) throw awm::IoError("cannot write loss history: " + loss_csv_path);
  csv << awm::loss_history_csv(result.history);

  std::cout << "trained " << result.steps << " steps; checkpoint "
            << checkpoint_path << ", losses " << loss_csv_path << "\n";
  if (!result.history.empty()) {
    const awm::LossReport& last = result.history.back().mean;
    std::cout << "final epoch mean: total=" << last.total
              << " vlm=" << last.vlm << " color=" << last.color
              << " l1=" << last.l1 << " ssim=" << last.ssim << "\n";
  }
  return 0;
}

int cmd_fuse(const std::string& checkpoint_path, const std::string& vi_path,
             const std::string& ir_path, const std::string& sidecar_path,
             const std::string& out_path) {
  const awm::TrainConfig cfg = awm::checkpoint_config(checkpoint_path);
  const bool needs_text =
      cfg.model.gtpm_text_enabled || cfg.model.ltpm_enabled;
  if (needs_text && (sidecar_path.empty() || !fs::exists(sidecar_path))) {
    std::cerr << "awmfuse fuse: text sidecar required by this checkpoint ("
              << (sidecar_path.empty() ? "--sidecar not given" : sidecar_path)
              << ")\n";
    return kExitSidecar;
  }

  auto provider = maybe_cache(awm::make_provider(cfg, nullptr));
  auto trainer = awm::trainer_from_checkpoint(checkpoint_path, provider);

  awm::ImagePair pair;
  pair.visible = awm::load_image_rgb(vi_path);
  pair.infrared = awm::load_image_gray(ir_path);
  pair.id = fs::path(vi_path).stem().string();
  if (pair.visible.height() != pair.infrared.height() ||
      pair.visible.width() != pair.infrared.width()) {
    std::cerr << "awmfuse fuse: visible and infrared dimensions differ\n";
    return kExitShape;
  }

  awm::TextBundle bundle;
  if (needs_text) {
    try {
      bundle = awm::load_text_bundle(sidecar_path, provider.get(),
                                     cfg.model.ltpm_enabled);
    } catch (const awm::SchemaError& e) {
      std::cerr << "awmfuse fuse: " << e.what() << "\n";
      return kExitSidecar;
    } catch (const awm::TokenBudgetExceeded& e) {
      std::cerr << "awmfuse fuse: " << e.what() << "\n";
      return kExitSidecar;
    }
  }

  try {
    const awm::ImageRgb fused =
        awm::fuse_image(trainer->model(), cfg, pair, bundle, *provider);
    awm::save_image(fused, out_path);
  } catch (const awm::ShapeMismatch& e) {
    std::cerr << "awmfuse fuse: " << e.what() << "\n";
    return kExitShape;
  } catch (const awm::IndivisibleSpatialSize& e) {
    std::cerr << "awmfuse fuse: " << e.what() << "\n";
    return kExitShape;
  }
  std::cout << "fused image written to " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const std::string& fused_dir, const std::string& vi_dir,
                 const std::string& ir_dir, const std::string& out_csv) {
  const awm::BatchEvaluation batch =
      awm::batch_evaluate(fused_dir, vi_dir, ir_dir);
  awm::write_metrics_csv(batch, out_csv);
  std::cout << "evaluated " << batch.rows.size() << " images; report "
            << out_csv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text-guided infrared/visible fusion for adverse weather"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::Throw);

  // degrade
  auto* degrade = app.add_subcommand("degrade", "build a synthetic dataset");
  std::string clean_dir, out_dir;
  int per_type = 3;
  std::uint64_t degrade_seed = 0;
  bool degrade_ir = false;
  degrade->add_option("--clean-dir", clean_dir, "directory of clean PNGs")
      ->required();
  degrade->add_option("--out-dir", out_dir, "output dataset directory")
      ->required();
  degrade->add_option("--per-type", per_type, "pairs per weather kind");
  degrade->add_option("--seed", degrade_seed, "generator seed");
  degrade->add_flag("--degrade-ir", degrade_ir,
                    "also reduce infrared contrast");

  // train
  auto* train = app.add_subcommand("train", "train a fusion model");
  std::string manifest_path, config_path, ckpt_path, loss_csv;
  std::string detail_text, text_mode, provider_name, channels_csv, blocks_csv;
  int crop = 0, batch = 0, epochs = 0, max_steps = -1;
  double lr = 0.0;
  std::uint64_t train_seed = 0;
  bool no_gtpm = false, no_ltpm = false, no_vlm = false;
  bool seed_given = false;
  train->add_option("--manifest", manifest_path, "dataset manifest.json")
      ->required();
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--out-checkpoint", ckpt_path, "checkpoint to write")
      ->required();
  train->add_option("--loss-csv", loss_csv, "loss history CSV path");
  train->add_flag("--no-gtpm", no_gtpm, "disable the global text path");
  train->add_flag("--no-ltpm", no_ltpm, "disable the local text module");
  train->add_flag("--no-vlm-loss", no_vlm, "disable the alignment loss");
  train->add_option("--detail-text", detail_text, "chatgpt|caption");
  train->add_option("--text-mode", text_mode,
                    "clean|noisy|reduced|augmented");
  train->add_option("--provider", provider_name, "stub|aligned");
  train->add_option("--crop", crop, "training crop size");
  train->add_option("--batch", batch, "batch size");
  train->add_option("--lr", lr, "learning rate");
  train->add_option("--epochs", epochs, "epoch budget");
  train->add_option("--max-steps", max_steps, "optimizer step cap (0 = none)");
  auto* seed_opt = train->add_option("--seed", train_seed, "training seed");
  train->add_option("--channels", channels_csv, "channel schedule CSV");
  train->add_option("--blocks", blocks_csv, "blocks per stage CSV");

  // fuse
  auto* fuse = app.add_subcommand("fuse", "fuse one registered pair");
  std::string fuse_ckpt, vi_path, ir_path, sidecar_path, fuse_out;
  fuse->add_option("--checkpoint", fuse_ckpt, "trained checkpoint")->required();
  fuse->add_option("--vi", vi_path, "visible PNG")->required();
  fuse->add_option("--ir", ir_path, "infrared PNG")->required();
  fuse->add_option("--sidecar", sidecar_path, "text sidecar JSON");
  fuse->add_option("--out", fuse_out, "fused PNG to write")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score fused images");
  std::string fused_dir, eval_vi_dir, eval_ir_dir, out_csv;
  evaluate->add_option("--fused-dir", fused_dir, "fused PNGs")->required();
  evaluate->add_option("--vi-dir", eval_vi_dir, "visible PNGs")->required();
  evaluate->add_option("--ir-dir", eval_ir_dir, "infrared PNGs")->required();
  evaluate->add_option("--out-csv", out_csv, "CSV report path")->required();

  CLI11_PARSE(app, argc, argv);
  seed_given = seed_opt->count() > 0;

  try {
    if (degrade->parsed())
      return cmd_degrade(clean_dir, out_dir, per_type, degrade_seed,
                         degrade_ir);
    if (train->parsed()) {
      std::map<std::string, std::string> kv;
      if (!config_path.empty()) kv = awm::parse_kv_file(config_path);
      if (no_gtpm) kv["gtpm_text"] = "off";
      if (no_ltpm) kv["ltpm"] = "off";
      if (no_vlm) kv["vlm_loss"] = "off";
      if (!detail_text.empty()) kv["detail_text"] = detail_text;
      if (!text_mode.empty()) kv["text_mode"] = text_mode;
      if (!provider_name.empty()) kv["provider"] = provider_name;
      if (crop > 0) kv["crop"] = std::to_string(crop);
      if (batch > 0) kv["batch"] = std::to_string(batch);
      if (lr > 0.0) kv["lr"] = std::to_string(lr);
      if (epochs > 0) kv["epochs"] = std::to_string(epochs);
      if (max_steps >= 0) kv["max_steps"] = std::to_string(max_steps);
      if (seed_given) kv["seed"] = std::to_string(train_seed);
      if (!channels_csv.empty()) kv["channels"] = channels_csv;
      if (!blocks_csv.empty()) kv["blocks"] = blocks_csv;
      return cmd_train(kv, manifest_path, ckpt_path, loss_csv);
    }
    if (fuse->parsed())
      return cmd_fuse(fuse_ckpt, vi_path, ir_path, sidecar_path, fuse_out);
    if (evaluate->parsed())
      return cmd_evaluate(fused_dir, eval_vi_dir, eval_ir_dir, out_csv);
  } catch (const awm::Error& e) {
    std::cerr << "awmfuse: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "awmfuse: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
