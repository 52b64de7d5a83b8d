// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "awmfuse/losses.hpp"
#include "awmfuse/model.hpp"
#include "awmfuse/weathersim.hpp"

namespace awm {

enum class DetailTextMode { kChatgpt, kCaption };
enum class ProviderKind { kStub, kAligned };

struct TrainConfig {
  int crop = 160;
  int batch = 2;
  double lr = 1e-3;
  int epochs = 300;
  int max_steps = 0;  // optimizer-step cap; 0 = run all epochs
  std::uint64_t seed = 1;
  ModelConfig model;
  bool vlm_loss_enabled = true;
  DetailTextMode detail_text = DetailTextMode::kChatgpt;
  TextMode text_mode = TextMode::kClean;
  ProviderKind provider_kind = ProviderKind::kAligned;
  std::uint64_t provider_seed = 11;

  void validate() const;
  std::map<std::string, std::string> to_kv() const;
  static TrainConfig from_kv(const std::map<std::string, std::string>& kv);
  std::string canonical_string() const;
  std::uint64_t hash() const;
};

/// key = value lines, '#' comments. Unknown keys throw.
std::map<std::string, std::string> parse_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_string(const std::string& text);

struct TrainSample {
  ImagePair pair;      // degraded + clean counterparts
  TextBundle bundle;   // uncorrupted sidecar text
};

/// Loads every manifest entry; validates sidecars against the provider's
/// token budget when given. Throws EmptyDataset on an empty manifest.
std::vector<TrainSample> load_training_set(const DatasetManifest& manifest,
                                           const EmbeddingProvider* provider);

/// Builds the provider the config describes. An aligned provider
/// registers each sample's clean description against its clean visible
/// image; pass no samples to fall back to the bare stub.
std::shared_ptr<EmbeddingProvider> make_provider(
    const TrainConfig& cfg, const std::vector<TrainSample>* samples);

struct EpochStats {
  int epoch = 0;
  LossReport mean;
};

struct TrainResult {
  std::vector<EpochStats> history;
  long steps = 0;
};

std::string loss_history_csv(const std::vector<EpochStats>& history);

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, std::shared_ptr<EmbeddingProvider> provider);

  /// Runs until the epoch budget or max_steps cap, whichever first.
  /// Deterministic under a fixed config; per-step scheduling (sample
  /// order, crop windows, noisy-text draws) is derived statelessly from
  /// (seed, step), so a reloaded checkpoint continues identically.
  /// Throws DivergedLoss when the total loss stops being finite.
  TrainResult train(const std::vector<TrainSample>& data);

  /// One optimizer step over the given samples; returns the mean report.
  LossReport train_step(const std::vector<TrainSample>& data);

  const TrainConfig& config() const { return cfg_; }
  AwmFuseModel& model() { return *model_; }
  const AwmFuseModel& model() const { return *model_; }
  long step() const { return step_; }
  const EmbeddingProvider& provider() const { return *provider_; }

  void save_checkpoint(const std::string& path) const;
  /// Restores parameters, optimizer state and step counter. The stored
  /// config hash must match this trainer's config.
  void restore_checkpoint(const std::string& path);

 private:
  LossReport run_one_step(const std::vector<TrainSample>& data);
  const Tensor* text_embedding_memo(const std::string& text);
  const Tensor* detail_tokens_memo(const std::string& text);

  TrainConfig cfg_;
  std::shared_ptr<EmbeddingProvider> provider_;
  std::unique_ptr<AwmFuseModel> model_;

  // Adam state, parallel to the parameter store entries.
  std::vector<Tensor> adam_m_;
  std::vector<Tensor> adam_v_;
  long adam_t_ = 0;
  long step_ = 0;

  std::map<std::string, Tensor> global_memo_;
  std::map<std::string, Tensor> local_memo_;
};

/// Loads a checkpoint into a freshly constructed trainer (config comes
/// from the checkpoint itself).
std::unique_ptr<Trainer> trainer_from_checkpoint(
    const std::string& path, std::shared_ptr<EmbeddingProvider> provider);

/// Reads only the embedded config of a checkpoint.
TrainConfig checkpoint_config(const std::string& path);

/// Full inference path: embeds the bundle with the provider (detail text
/// source per the config), pads, forwards and clamps.
ImageRgb fuse_image(const AwmFuseModel& model, const TrainConfig& cfg,
                    const ImagePair& pair, const TextBundle& bundle,
                    const EmbeddingProvider& provider);

}  // namespace awm
