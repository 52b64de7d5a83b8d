// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "awmfuse/image_io.hpp"

namespace awm {

// ---- config (de)serialization ------------------------------------------------

namespace {

std::string ints_csv(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> csv_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (crop < 1) throw Error("train config: crop must be positive");
  if (batch < 1) throw Error("train config: batch must be >= 1");
  if (!(lr > 0.0)) throw Error("train config: lr must be positive");
  if (epochs < 1) throw Error("train config: epochs must be >= 1");
  if (max_steps < 0) throw Error("train config: max_steps must be >= 0");
  model.validate();
}

std::map<std::string, std::string> TrainConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["crop"] = std::to_string(crop);
  kv["batch"] = std::to_string(batch);
  kv["lr"] = fmt_double(lr);
  kv["epochs"] = std::to_string(epochs);
  kv["max_steps"] = std::to_string(max_steps);
  kv["seed"] = std::to_string(seed);
  kv["vlm_loss"] = vlm_loss_enabled ? "on" : "off";
  kv["detail_text"] =
      detail_text == DetailTextMode::kCaption ? "caption" : "chatgpt";
  kv["text_mode"] = to_string(text_mode);
  kv["provider"] = provider_kind == ProviderKind::kStub ? "stub" : "aligned";
  kv["provider_seed"] = std::to_string(provider_seed);
  kv["channels"] = ints_csv(model.channels);
  kv["blocks"] = ints_csv(model.blocks);
  kv["state_dim"] = std::to_string(model.state_dim);
  kv["se_reduction"] = std::to_string(model.se_reduction);
  kv["attn_dim"] = std::to_string(model.attn_dim);
  kv["mod_hidden"] = std::to_string(model.mod_hidden);
  kv["wt_levels"] = std::to_string(model.wt_levels);
  kv["dilation_rates"] = std::to_string(model.dilation_rates[0]) + "," +
                         std::to_string(model.dilation_rates[1]) + "," +
                         std::to_string(model.dilation_rates[2]);
  kv["text_dim_global"] = std::to_string(model.text_dim_global);
  kv["text_dim_local"] = std::to_string(model.text_dim_local);
  kv["gtpm_text"] = model.gtpm_text_enabled ? "on" : "off";
  kv["ltpm"] = model.ltpm_enabled ? "on" : "off";
  return kv;
}

TrainConfig TrainConfig::from_kv(const std::map<std::string, std::string>& kv) {
  TrainConfig cfg;
  auto on_off = [](const std::string& v, const std::string& key) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw Error("config: bad boolean for " + key + ": " + v);
  };
  for (const auto& [key, value] : kv) {
    if (key == "crop") cfg.crop = std::stoi(value);
    else if (key == "batch") cfg.batch = std::stoi(value);
    else if (key == "lr") cfg.lr = std::stod(value);
    else if (key == "epochs") cfg.epochs = std::stoi(value);
    else if (key == "max_steps") cfg.max_steps = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "vlm_loss") cfg.vlm_loss_enabled = on_off(value, key);
    else if (key == "detail_text") {
      if (value == "caption") cfg.detail_text = DetailTextMode::kCaption;
      else if (value == "chatgpt") cfg.detail_text = DetailTextMode::kChatgpt;
      else throw Error("config: detail_text must be chatgpt|caption");
    } else if (key == "text_mode") cfg.text_mode = text_mode_from_string(value);
    else if (key == "provider") {
      if (value == "stub") cfg.provider_kind = ProviderKind::kStub;
      else if (value == "aligned") cfg.provider_kind = ProviderKind::kAligned;
      else throw Error("config: provider must be stub|aligned");
    } else if (key == "provider_seed") cfg.provider_seed = std::stoull(value);
    else if (key == "channels") cfg.model.channels = csv_ints(value);
    else if (key == "blocks") cfg.model.blocks = csv_ints(value);
    else if (key == "state_dim") cfg.model.state_dim = std::stoi(value);
    else if (key == "se_reduction") cfg.model.se_reduction = std::stoi(value);
    else if (key == "attn_dim") cfg.model.attn_dim = std::stoi(value);
    else if (key == "mod_hidden") cfg.model.mod_hidden = std::stoi(value);
    else if (key == "wt_levels") cfg.model.wt_levels = std::stoi(value);
    else if (key == "dilation_rates") {
      const std::vector<int> rates = csv_ints(value);
      if (rates.size() != 3) throw Error("config: dilation_rates needs 3 values");
      cfg.model.dilation_rates = {rates[0], rates[1], rates[2]};
    } else if (key == "text_dim_global") cfg.model.text_dim_global = std::stoi(value);
    else if (key == "text_dim_local") cfg.model.text_dim_local = std::stoi(value);
    else if (key == "gtpm_text") cfg.model.gtpm_text_enabled = on_off(value, key);
    else if (key == "ltpm") cfg.model.ltpm_enabled = on_off(value, key);
    else throw Error("config: unknown key \"" + key + "\"");
  }
  cfg.validate();
  return cfg;
}

std::string TrainConfig::canonical_string() const {
  std::string out;
  for (const auto& [key, value] : to_kv()) out += key + "=" + value + "\n";
  return out;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(canonical_string()); }

std::map<std::string, std::string> parse_kv_string(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected key=value");
    kv[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_kv_string(buf.str());
}

// ---- dataset ---------------------------------------------------------------------

std::vector<TrainSample> load_training_set(const DatasetManifest& manifest,
                                           const EmbeddingProvider* provider) {
  if (manifest.entries.empty())
    throw EmptyDataset("manifest lists no training pairs");
  std::vector<TrainSample> samples;
  samples.reserve(manifest.entries.size());
  const std::string root = manifest.root.empty() ? "." : manifest.root;
  for (const ManifestEntry& e : manifest.entries) {
    TrainSample s;
    s.pair.id = e.id;
    s.pair.visible = load_image_rgb(root + "/" + e.vi);
    s.pair.infrared = load_image_gray(root + "/" + e.ir);
    s.pair.clean_visible = load_image_rgb(root + "/" + e.clean_vi);
    s.pair.clean_infrared = load_image_gray(root + "/" + e.clean_ir);
    s.bundle = load_text_bundle(root + "/" + e.sidecar, provider);
    samples.push_back(std::move(s));
  }
  return samples;
}

std::shared_ptr<EmbeddingProvider> make_provider(
    const TrainConfig& cfg, const std::vector<TrainSample>* samples) {
  auto stub = std::make_shared<StubProvider>(
      cfg.model.text_dim_global, cfg.model.text_dim_local, cfg.provider_seed);
  if (cfg.provider_kind == ProviderKind::kStub || !samples || samples->empty())
    return stub;
  auto aligned = std::make_shared<AlignedProvider>(stub);
  for (const TrainSample& s : *samples)
    if (s.pair.clean_visible)
      aligned->register_alignment(s.bundle.clean_description,
                                  *s.pair.clean_visible);
  return aligned;
}

// ---- trainer ---------------------------------------------------------------------

Trainer::Trainer(const TrainConfig& cfg,
                 std::shared_ptr<EmbeddingProvider> provider)
    : cfg_(cfg), provider_(std::move(provider)) {
  cfg_.validate();
  if (!provider_) throw ProviderError("trainer needs a provider");
  if (provider_->dim_global() != cfg_.model.text_dim_global ||
      provider_->dim_local() != cfg_.model.text_dim_local)
    throw ProviderError("provider dims do not match the model config");
  model_ = std::make_unique<AwmFuseModel>(cfg_.model, cfg_.seed);
  for (const auto& e : model_->params().entries()) {
    adam_m_.emplace_back(e.value.shape());
    adam_v_.emplace_back(e.value.shape());
  }
}

const Tensor* Trainer::text_embedding_memo(const std::string& text) {
  auto it = global_memo_.find(text);
  if (it == global_memo_.end())
    it = global_memo_
             .emplace(text, provider_->encode_text_global(text).vector)
             .first;
  return &it->second;
}

const Tensor* Trainer::detail_tokens_memo(const std::string& text) {
  auto it = local_memo_.find(text);
  if (it == local_memo_.end())
    it = local_memo_.emplace(text, provider_->encode_text_local(text).tokens)
             .first;
  return &it->second;
}

LossReport Trainer::run_one_step(const std::vector<TrainSample>& data) {
  const int n = static_cast<int>(data.size());
  const int steps_per_epoch = (n + cfg_.batch - 1) / cfg_.batch;
  const long epoch = step_ / steps_per_epoch;
  const int pos = static_cast<int>(step_ % steps_per_epoch);

  // Epoch-wise Fisher-Yates order, derived statelessly from (seed, epoch).
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng order_rng(hash_combine(cfg_.seed, fnv1a64("order:" + std::to_string(epoch))));
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[order_rng.below(static_cast<std::uint64_t>(i) + 1)]);

  const int first = pos * cfg_.batch;
  const int last = std::min(n, first + cfg_.batch);
  const int batch_n = last - first;

  auto* encoder = dynamic_cast<const DifferentiableImageEncoder*>(provider_.get());
  if (cfg_.vlm_loss_enabled && !encoder)
    throw ProviderError("vlm loss needs a differentiable image encoder");

  model_->params().zero_grads();
  LossReport sum;
  for (int bi = first; bi < last; ++bi) {
    const TrainSample& sample = data[static_cast<std::size_t>(order[static_cast<std::size_t>(bi)])];
    if (!sample.pair.clean_visible || !sample.pair.clean_infrared)
      throw EmptyDataset("training sample lacks clean counterparts: " +
                         sample.pair.id);
    const std::uint64_t crop_seed = hash_combine(
        cfg_.seed, fnv1a64("crop:" + std::to_string(step_) + ":" +
                           std::to_string(bi)));
    // Crop no larger than the frame, snapped down to the backbone's
    // spatial granularity.
    const int mult = cfg_.model.spatial_multiple();
    const int crop_size = std::min({cfg_.crop, sample.pair.visible.height(),
                                    sample.pair.visible.width()}) /
                          mult * mult;
    if (crop_size < mult)
      throw CropTooLarge("sample " + sample.pair.id +
                         " is smaller than the model's spatial granularity");
    const ImagePair cropped = random_crop_pair(sample.pair, crop_size, crop_seed);

    TextBundle text = sample.bundle;
    if (cfg_.text_mode != TextMode::kClean) {
      // Noisy draws are re-seeded per visit so misleading text stays
      // inconsistent across visits instead of becoming a stable
      // alternative caption the model could simply absorb.
      const std::uint64_t text_seed = hash_combine(
          cfg_.seed, fnv1a64("text:" + std::to_string(step_) + ":" +
                             sample.pair.id));
      CorruptOptions copts;
      copts.max_tokens = provider_->max_tokens();
      text = corrupt_text(text, cfg_.text_mode, text_seed, copts);
    }

    AwmFuseModel::TextInputs inputs;
    Tensor clip_emb;
    if (cfg_.model.gtpm_text_enabled || cfg_.model.ltpm_enabled) {
      clip_emb = provider_->encode_image(cropped.visible).vector;
      inputs.clip_image_embedding = &clip_emb;
    }
    if (cfg_.model.gtpm_text_enabled)
      inputs.caption_embedding = text_embedding_memo(text.caption);
    if (cfg_.model.ltpm_enabled)
      inputs.detail_tokens = detail_tokens_memo(
          cfg_.detail_text == DetailTextMode::kCaption ? text.caption
                                                       : text.detail);

    ad::Tape tape;
    ad::Value vi = tape.constant(cropped.visible.pixels);
    ad::Value ir = tape.constant(cropped.infrared.pixels);
    ad::Value fused = model_->forward(tape, vi, ir, inputs);

    const Tensor* clean_emb =
        cfg_.vlm_loss_enabled
            ? text_embedding_memo(sample.bundle.clean_description)
            : nullptr;
    LossNodes losses = total_loss_node(
        tape, fused, tape.constant(cropped.clean_visible->pixels),
        tape.constant(cropped.clean_infrared->pixels), clean_emb,
        cfg_.vlm_loss_enabled ? encoder : nullptr);

    const LossReport report = report_from_nodes(tape, losses);
    if (!std::isfinite(report.total))
      throw DivergedLoss("non-finite total loss at step " +
                         std::to_string(step_) + " on " + sample.pair.id);
    sum.vlm += report.vlm;
    sum.color += report.color;
    sum.l1 += report.l1;
    sum.ssim += report.ssim;
    sum.total += report.total;

    tape.backward(ad::scale(tape, losses.total, 1.0 / batch_n));
  }

  if (!model_->params().grads_finite())
    throw DivergedLoss("non-finite gradients at step " + std::to_string(step_));

  // Adam with bias correction.
  ++adam_t_;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(b1, double(adam_t_));
  const double bc2 = 1.0 - std::pow(b2, double(adam_t_));
  std::size_t k = 0;
  for (auto& e : model_->params().entries()) {
    Tensor& m = adam_m_[k];
    Tensor& v = adam_v_[k];
    ++k;
    for (std::size_t i = 0; i < e.value.numel(); ++i) {
      const double g = e.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      e.value[i] -= cfg_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
  ++step_;

  LossReport mean;
  mean.vlm = sum.vlm / batch_n;
  mean.color = sum.color / batch_n;
  mean.l1 = sum.l1 / batch_n;
  mean.ssim = sum.ssim / batch_n;
  mean.total = sum.total / batch_n;
  return mean;
}

LossReport Trainer::train_step(const std::vector<TrainSample>& data) {
  if (data.empty()) throw EmptyDataset("no training samples");
  return run_one_step(data);
}

TrainResult Trainer::train(const std::vector<TrainSample>& data) {
  if (data.empty()) throw EmptyDataset("no training samples");
  const int n = static_cast<int>(data.size());
  const int steps_per_epoch = (n + cfg_.batch - 1) / cfg_.batch;
  long budget = static_cast<long>(cfg_.epochs) * steps_per_epoch;
  if (cfg_.max_steps > 0) budget = std::min<long>(budget, cfg_.max_steps);

  TrainResult result;
  LossReport epoch_sum;
  int epoch_steps = 0;
  long epoch_index = step_ / steps_per_epoch;
  while (step_ < budget) {
    const LossReport report = run_one_step(data);
    epoch_sum.vlm += report.vlm;
    epoch_sum.color += report.color;
    epoch_sum.l1 += report.l1;
    epoch_sum.ssim += report.ssim;
    epoch_sum.total += report.total;
    ++epoch_steps;
    ++result.steps;
    const bool epoch_done = step_ % steps_per_epoch == 0;
    if (epoch_done || step_ >= budget) {
      EpochStats stats;
      stats.epoch = static_cast<int>(epoch_index);
      stats.mean.vlm = epoch_sum.vlm / epoch_steps;
      stats.mean.color = epoch_sum.color / epoch_steps;
      stats.mean.l1 = epoch_sum.l1 / epoch_steps;
      stats.mean.ssim = epoch_sum.ssim / epoch_steps;
      stats.mean.total = epoch_sum.total / epoch_steps;
      result.history.push_back(stats);
      epoch_sum = LossReport{};
      epoch_steps = 0;
      ++epoch_index;
    }
  }
  return result;
}

std::string loss_history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,vlm,color,l1,ssim,total\n";
  char line[160];
  for (const EpochStats& s : history) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", s.epoch,
                  s.mean.vlm, s.mean.color, s.mean.l1, s.mean.ssim,
                  s.mean.total);
    out += line;
  }
  return out;
}

// ---- checkpoints ------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[8] = {'A', 'W', 'M', 'F', 'C', 'K', 'P', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof v);
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
  std::uint32_t len = 0;
  read_pod(in, len);
  std::string s(len, '\0');
  in.read(s.data(), len);
  return s;
}

void write_doubles(std::ofstream& out, const Tensor& t) {
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

void read_doubles(std::ifstream& in, Tensor& t) {
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kCkptMagic, 8);
  write_pod(out, cfg_.hash());
  write_string(out, cfg_.canonical_string());
  write_pod(out, static_cast<std::uint64_t>(step_));
  write_pod(out, static_cast<std::uint64_t>(adam_t_));
  const auto& entries = model_->params().entries();
  write_pod(out, static_cast<std::uint32_t>(entries.size()));
  std::size_t k = 0;
  for (const auto& e : entries) {
    write_string(out, e.name);
    write_pod(out, static_cast<std::uint32_t>(e.value.shape().size()));
    for (int d : e.value.shape()) write_pod(out, static_cast<std::int32_t>(d));
    write_doubles(out, e.value);
    write_doubles(out, adam_m_[k]);
    write_doubles(out, adam_v_[k]);
    ++k;
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

namespace {

struct CkptHeader {
  std::uint64_t config_hash = 0;
  std::string config_text;
  std::uint64_t step = 0;
  std::uint64_t adam_t = 0;
};

CkptHeader read_header(std::ifstream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw IoError("not a checkpoint file: " + path);
  CkptHeader h;
  read_pod(in, h.config_hash);
  h.config_text = read_string(in);
  read_pod(in, h.step);
  read_pod(in, h.adam_t);
  if (!in) throw IoError("truncated checkpoint: " + path);
  return h;
}

}  // namespace

void Trainer::restore_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  const CkptHeader header = read_header(in, path);
  if (header.config_hash != cfg_.hash())
    throw Error("checkpoint config hash mismatch: " + path);
  step_ = static_cast<long>(header.step);
  adam_t_ = static_cast<long>(header.adam_t);
  std::uint32_t count = 0;
  read_pod(in, count);
  auto& entries = model_->params().entries();
  if (count != entries.size())
    throw Error("checkpoint parameter count mismatch: " + path);
  std::size_t k = 0;
  for (auto& e : entries) {
    const std::string name = read_string(in);
    if (name != e.name)
      throw Error("checkpoint parameter order mismatch at " + name);
    std::uint32_t ndim = 0;
    read_pod(in, ndim);
    std::vector<int> shape(ndim);
    for (std::uint32_t d = 0; d < ndim; ++d) {
      std::int32_t v = 0;
      read_pod(in, v);
      shape[d] = v;
    }
    if (shape != e.value.shape())
      throw Error("checkpoint shape mismatch at " + name);
    read_doubles(in, e.value);
    read_doubles(in, adam_m_[k]);
    read_doubles(in, adam_v_[k]);
    ++k;
  }
  if (!in) throw IoError("truncated checkpoint: " + path);
}

TrainConfig checkpoint_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  const CkptHeader header = read_header(in, path);
  return TrainConfig::from_kv(parse_kv_string(header.config_text));
}

std::unique_ptr<Trainer> trainer_from_checkpoint(
    const std::string& path, std::shared_ptr<EmbeddingProvider> provider) {
  const TrainConfig cfg = checkpoint_config(path);
  if (!provider) provider = make_provider(cfg, nullptr);
  auto trainer = std::make_unique<Trainer>(cfg, std::move(provider));
  trainer->restore_checkpoint(path);
  return trainer;
}

ImageRgb fuse_image(const AwmFuseModel& model, const TrainConfig& cfg,
                    const ImagePair& pair, const TextBundle& bundle,
                    const EmbeddingProvider& provider) {
  AwmFuseModel::TextInputs inputs;
  Tensor clip_emb, caption_emb, detail_tokens;
  if (cfg.model.gtpm_text_enabled || cfg.model.ltpm_enabled) {
    clip_emb = provider.encode_image(pair.visible).vector;
    inputs.clip_image_embedding = &clip_emb;
  }
  if (cfg.model.gtpm_text_enabled) {
    caption_emb = provider.encode_text_global(bundle.caption).vector;
    inputs.caption_embedding = &caption_emb;
  }
  if (cfg.model.ltpm_enabled) {
    const std::string& source = cfg.detail_text == DetailTextMode::kCaption
                                    ? bundle.caption
                                    : bundle.detail;
    detail_tokens = provider.encode_text_local(source).tokens;
    inputs.detail_tokens = &detail_tokens;
  }
  return model.fuse_pair(pair, inputs);
}

}  // namespace awm
