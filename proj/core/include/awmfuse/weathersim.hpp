// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "awmfuse/image.hpp"
#include "awmfuse/text.hpp"

namespace awm {

enum class WeatherKind { kRain, kHaze, kSnow };

WeatherKind weather_kind_from_string(const std::string& name);
std::string to_string(WeatherKind kind);

struct DegradationSpec {
  WeatherKind kind = WeatherKind::kRain;
  double severity = 0.5;  // [0,1]
  std::uint64_t seed = 0;
};

/// Applies the synthetic degradation to the visible image. severity 0 is
/// a bit-exact no-op; rain adds seeded oriented bright streaks, haze
/// applies atmospheric scattering I = J*t + A*(1-t) over a smooth seeded
/// transmission field (A = 0.9), snow composites seeded soft elliptical
/// occluders. Deterministic per (image, spec); output clamped to [0,1].
ImageRgb degrade(const ImageRgb& clean_vi, const DegradationSpec& spec);

/// Optional infrared weathering: mean-preserving contrast reduction.
ImageGray reduce_infrared_contrast(const ImageGray& ir, double severity);

struct ManifestEntry {
  std::string id;
  std::string kind;
  double severity = 0.0;
  std::uint64_t seed = 0;
  // Paths relative to the manifest's directory.
  std::string vi, ir, clean_vi, clean_ir, sidecar;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  std::string root;  // set on load; not serialized
};

/// Builds per_type pairs for each of the three weather kinds from the
/// clean PNGs in clean_dir ("<stem>.png", optionally "<stem>_ir.png" for
/// a registered infrared frame; otherwise the luminance plane stands
/// in). Each pair directory holds vi/ir/clean_vi/clean_ir PNGs plus a
/// text sidecar; a manifest.json indexes everything. Reproducible for a
/// fixed seed.
DatasetManifest build_dataset(const std::string& clean_dir,
                              const std::string& out_dir, int per_type,
                              std::uint64_t seed,
                              bool degrade_infrared = false);

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

}  // namespace awm
