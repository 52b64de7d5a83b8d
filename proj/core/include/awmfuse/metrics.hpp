// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "awmfuse/image.hpp"

namespace awm {

/// Fusion quality scores for one (fused, visible, infrared) triple. All
/// computed on 8-bit-quantized luminance. Higher is better except qcv.
/// Parameter choices are documented in the README.
struct MetricReport {
  double qg = 0.0;   // gradient-preservation, [0,1]
  double qm = 0.0;   // two-level wavelet edge preservation, [0,2]
  double qs = 0.0;   // saliency-weighted structural index, [0,1]
  double qcv = 0.0;  // CSF-weighted perceptual distortion, >= 0 (lower better)
  double vif = 0.0;  // pixel-domain visual information fidelity
  double ssim = 0.0; // mean SSIM against the two sources
  double scd = 0.0;  // sum of correlations of differences, [-2,2]
};

MetricReport evaluate(const ImageRgb& fused, const ImageRgb& vi,
                      const ImageGray& ir);

/// Windowed mean SSIM between two luminance grids in [0,255]; exposed so
/// higher layers can score single pairs.
double ssim_metric(const Tensor& x, const Tensor& y);

/// Quantized luminance plane [H,W] in 0..255.
Tensor luminance255(const ImageRgb& img);
Tensor luminance255(const ImageGray& img);

struct BatchEvaluation {
  std::vector<std::pair<std::string, MetricReport>> rows;
  MetricReport mean;
};

/// Evaluates every PNG in dir_fused against identically named files in
/// dir_vi and dir_ir. Throws EmptyDataset when dir_fused has no PNGs and
/// MissingCounterpart when a source file is absent.
BatchEvaluation batch_evaluate(const std::string& dir_fused,
                               const std::string& dir_vi,
                               const std::string& dir_ir);

/// CSV with header id,qg,qm,qs,qcv,vif,ssim,scd, one row per image and a
/// final mean row. Byte-deterministic for fixed inputs.
std::string metrics_csv(const BatchEvaluation& batch);
void write_metrics_csv(const BatchEvaluation& batch, const std::string& path);

}  // namespace awm
