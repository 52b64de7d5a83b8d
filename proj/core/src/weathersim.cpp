// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/weathersim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "awmfuse/image_io.hpp"

namespace awm {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAtmosphericLight = 0.9;

void add_rain(Tensor& px, double severity, Rng& rng) {
  const int h = px.dim(1), w = px.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int streaks =
      std::max(1, static_cast<int>(severity * h * w / 180.0));
  for (int s = 0; s < streaks; ++s) {
    const double x0 = rng.uniform(0.0, w);
    const double y0 = rng.uniform(0.0, h);
    const double angle = rng.uniform(70.0, 110.0) * kPi / 180.0;
    const double len = rng.uniform(h / 12.0, h / 5.0);
    const double sigma = rng.uniform(0.4, 0.9);
    const double gain = severity * rng.uniform(0.25, 0.65);
    const double dx = std::cos(angle), dy = std::sin(angle);
    const int radius = static_cast<int>(std::ceil(2.0 * sigma));
    for (double t = 0.0; t <= len; t += 0.5) {
      const double cx = x0 + t * dx, cy = y0 + t * dy;
      const int ylo = std::max(0, (int)std::floor(cy) - radius);
      const int yhi = std::min(h - 1, (int)std::ceil(cy) + radius);
      const int xlo = std::max(0, (int)std::floor(cx) - radius);
      const int xhi = std::min(w - 1, (int)std::ceil(cx) + radius);
      for (int y = ylo; y <= yhi; ++y)
        for (int x = xlo; x <= xhi; ++x) {
          const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          const double a = gain * std::exp(-d2 / (2.0 * sigma * sigma));
          for (int c = 0; c < 3; ++c)
            px.data()[c * plane + static_cast<std::size_t>(y) * w + x] += a;
        }
    }
  }
}

// Smooth seeded field in [0,1]: bilinear upsampling of a coarse grid of
// uniforms ("value noise").
Tensor smooth_field(int h, int w, Rng& rng, int cell = 24) {
  const int gh = h / cell + 2, gw = w / cell + 2;
  Tensor grid({gh, gw});
  for (double& v : grid.vec()) v = rng.uniform();
  Tensor out({h, w});
  for (int y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y) / cell;
    const int y0 = static_cast<int>(fy);
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / cell;
      const int x0 = static_cast<int>(fx);
      const double tx = fx - x0;
      const double a = grid.at(y0, x0), b = grid.at(y0, x0 + 1);
      const double c = grid.at(y0 + 1, x0), d = grid.at(y0 + 1, x0 + 1);
      out.at(y, x) = (1 - ty) * ((1 - tx) * a + tx * b) +
                     ty * ((1 - tx) * c + tx * d);
    }
  }
  return out;
}

void add_haze(Tensor& px, double severity, Rng& rng) {
  const int h = px.dim(1), w = px.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const Tensor depth = smooth_field(h, w, rng);
  // Base transmission in (0,1); the severity exponent sweeps it from 1
  // (clear) at severity 0 toward 0 (opaque) at severity 1.
  const double expo = severity / std::max(1.0 - severity, 1e-9);
  for (std::size_t i = 0; i < plane; ++i) {
    const double t_base = std::exp(-1.2 * (0.35 + 0.65 * depth[i]));
    const double t = std::pow(t_base, expo);
    for (int c = 0; c < 3; ++c) {
      double& v = px.data()[c * plane + i];
      v = v * t + kAtmosphericLight * (1.0 - t);
    }
  }
}

void add_snow(Tensor& px, double severity, Rng& rng) {
  const int h = px.dim(1), w = px.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int flakes =
      std::max(1, static_cast<int>(severity * h * w / 250.0));
  for (int s = 0; s < flakes; ++s) {
    const double cx = rng.uniform(0.0, w);
    const double cy = rng.uniform(0.0, h);
    const double rx = rng.uniform(1.5, 4.5);
    const double ry = rx * rng.uniform(0.7, 1.3);
    const double phi = rng.uniform(0.0, kPi);
    const double alpha0 = 0.5 + 0.45 * rng.uniform();
    const double bright = rng.uniform(0.85, 1.0);
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    const int reach = static_cast<int>(std::ceil(2.0 * std::max(rx, ry)));
    const int ylo = std::max(0, (int)cy - reach), yhi = std::min(h - 1, (int)cy + reach);
    const int xlo = std::max(0, (int)cx - reach), xhi = std::min(w - 1, (int)cx + reach);
    for (int y = ylo; y <= yhi; ++y)
      for (int x = xlo; x <= xhi; ++x) {
        const double ux = (x - cx) * cphi + (y - cy) * sphi;
        const double uy = -(x - cx) * sphi + (y - cy) * cphi;
        const double r2 = (ux / rx) * (ux / rx) + (uy / ry) * (uy / ry);
        const double a = alpha0 * std::exp(-2.0 * r2);
        for (int c = 0; c < 3; ++c) {
          double& v = px.data()[c * plane + static_cast<std::size_t>(y) * w + x];
          v = v * (1.0 - a) + bright * a;
        }
      }
  }
}

}  // namespace

WeatherKind weather_kind_from_string(const std::string& name) {
  if (name == "rain") return WeatherKind::kRain;
  if (name == "haze") return WeatherKind::kHaze;
  if (name == "snow") return WeatherKind::kSnow;
  throw Error("unknown weather kind: " + name);
}

std::string to_string(WeatherKind kind) {
  switch (kind) {
    case WeatherKind::kRain: return "rain";
    case WeatherKind::kHaze: return "haze";
    case WeatherKind::kSnow: return "snow";
  }
  return "rain";
}

ImageRgb degrade(const ImageRgb& clean_vi, const DegradationSpec& spec) {
  if (spec.severity < 0.0 || spec.severity > 1.0)
    throw Error("degrade: severity must lie in [0,1]");
  ImageRgb out = clean_vi;
  if (spec.severity == 0.0) return out;  // exact no-op
  Rng rng(hash_combine(spec.seed, fnv1a64(to_string(spec.kind))));
  switch (spec.kind) {
    case WeatherKind::kRain:
      add_rain(out.pixels, spec.severity, rng);
      break;
    case WeatherKind::kHaze:
      add_haze(out.pixels, spec.severity, rng);
      break;
    case WeatherKind::kSnow:
      add_snow(out.pixels, spec.severity, rng);
      break;
  }
  clamp01(out.pixels);
  return out;
}

ImageGray reduce_infrared_contrast(const ImageGray& ir, double severity) {
  ImageGray out = ir;
  const double n = static_cast<double>(out.pixels.numel());
  double mean = 0.0;
  for (double v : out.pixels.vec()) mean += v;
  mean /= n;
  const double k = 1.0 - 0.5 * severity;
  for (double& v : out.pixels.vec()) v = mean + (v - mean) * k;
  clamp01(out.pixels);
  return out;
}

namespace {

std::string severity_word(double severity) {
  if (severity < 0.45) return "light";
  if (severity < 0.62) return "moderate";
  return "heavy";
}

std::string kind_phrase(WeatherKind kind) {
  switch (kind) {
    case WeatherKind::kRain: return "rain streaks across the view";
    case WeatherKind::kHaze: return "a veil of atmospheric haze";
    case WeatherKind::kSnow: return "falling snow flakes";
  }
  return "";
}

TextBundle make_sidecar(const std::string& id, const std::string& stem,
                        WeatherKind kind, double severity) {
  TextBundle b;
  b.image_id = id;
  const std::string kind_name = to_string(kind);
  const std::string amount = severity_word(severity);
  b.caption = "a " + stem + " scene degraded by " + amount + " " + kind_name;
  b.detail = "the " + stem + " scene is obscured by " + amount + " " +
             kind_phrase(kind) +
             "; structures and objects lose contrast while bright regions "
             "bloom, and fine textures near the ground are the hardest to "
             "make out";
  b.clean_description =
      "a clear " + stem + " scene with crisp contrast and natural colors";
  return b;
}

}  // namespace

DatasetManifest build_dataset(const std::string& clean_dir,
                              const std::string& out_dir, int per_type,
                              std::uint64_t seed, bool degrade_infrared) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(clean_dir))
    throw IoError("clean image directory not found: " + clean_dir);
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(clean_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() == ".png" &&
        name.find("_ir.png") == std::string::npos)
      stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw EmptyDataset("no clean PNGs under " + clean_dir);
  if (per_type < 1) throw Error("per_type must be >= 1");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.root = out_dir;
  const WeatherKind kinds[3] = {WeatherKind::kRain, WeatherKind::kHaze,
                                WeatherKind::kSnow};
  int pair_index = 0;
  for (const WeatherKind kind : kinds) {
    for (int i = 0; i < per_type; ++i, ++pair_index) {
      const std::string& stem = stems[static_cast<std::size_t>(pair_index) %
                                      stems.size()];
      const std::uint64_t entry_seed =
          hash_combine(seed, fnv1a64(to_string(kind) + ":" + std::to_string(i)));
      Rng rng(entry_seed);
      DegradationSpec spec;
      spec.kind = kind;
      spec.severity = 0.35 + 0.5 * rng.uniform();
      spec.seed = rng.next_u64();

      char id_buf[128];
      std::snprintf(id_buf, sizeof id_buf, "%s_%04d_%s",
                    to_string(kind).c_str(), i, stem.c_str());
      const std::string id = id_buf;

      const ImageRgb clean_vi = load_image_rgb(clean_dir + "/" + stem + ".png");
      const std::string ir_path = clean_dir + "/" + stem + "_ir.png";
      const ImageGray clean_ir = fs::exists(ir_path)
                                     ? load_image_gray(ir_path)
                                     : ImageGray(luminance(clean_vi));

      const ImageRgb degraded = degrade(clean_vi, spec);
      const ImageGray ir_out =
          degrade_infrared ? reduce_infrared_contrast(clean_ir, spec.severity)
                           : clean_ir;

      const std::string pair_dir = out_dir + "/" + id;
      fs::create_directories(pair_dir, ec);
      if (ec) throw IoError("cannot create " + pair_dir + ": " + ec.message());
      save_image(degraded, pair_dir + "/vi.png");
      save_image(ir_out, pair_dir + "/ir.png");
      save_image(clean_vi, pair_dir + "/clean_vi.png");
      save_image(clean_ir, pair_dir + "/clean_ir.png");
      save_text_bundle(make_sidecar(id, stem, kind, spec.severity),
                       pair_dir + "/text.json");

      ManifestEntry entry;
      entry.id = id;
      entry.kind = to_string(kind);
      entry.severity = spec.severity;
      entry.seed = spec.seed;
      entry.vi = id + "/vi.png";
      entry.ir = id + "/ir.png";
      entry.clean_vi = id + "/clean_vi.png";
      entry.clean_ir = id + "/clean_ir.png";
      entry.sidecar = id + "/text.json";
      manifest.entries.push_back(std::move(entry));
    }
  }
  save_manifest(manifest, out_dir + "/manifest.json");
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["seed"] = manifest.seed;
  nlohmann::json entries = nlohmann::json::array();
  for (const ManifestEntry& e : manifest.entries) {
    nlohmann::json je;
    je["id"] = e.id;
    je["kind"] = e.kind;
    je["severity"] = e.severity;
    je["seed"] = e.seed;
    je["paths"] = {{"vi", e.vi},
                   {"ir", e.ir},
                   {"clean_vi", e.clean_vi},
                   {"clean_ir", e.clean_ir},
                   {"sidecar", e.sidecar}};
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write manifest: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("manifest " + path + ": " + e.what());
  }
  DatasetManifest manifest;
  manifest.root = std::filesystem::path(path).parent_path().string();
  if (manifest.root.empty()) manifest.root = ".";
  try {
    manifest.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.kind = je.at("kind").get<std::string>();
      e.severity = je.at("severity").get<double>();
      e.seed = je.at("seed").get<std::uint64_t>();
      const auto& paths = je.at("paths");
      e.vi = paths.at("vi").get<std::string>();
      e.ir = paths.at("ir").get<std::string>();
      e.clean_vi = paths.at("clean_vi").get<std::string>();
      e.clean_ir = paths.at("clean_ir").get<std::string>();
      e.sidecar = paths.at("sidecar").get<std::string>();
      manifest.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("manifest " + path + ": " + e.what());
  }
  return manifest;
}

}  // namespace awm
