// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "awmfuse/image.hpp"
#include "awmfuse/text.hpp"

namespace awm {

/// Named components of the training objective; total is their plain
/// unweighted sum.
struct LossReport {
  double vlm = 0.0;
  double color = 0.0;
  double l1 = 0.0;
  double ssim = 0.0;
  double total = 0.0;
};

// ---- plain evaluation ------------------------------------------------------

/// 1 - cos(image embedding, clean-description embedding); in [0,2].
double vlm_loss(const ImageRgb& fused, const std::string& clean_description,
                const EmbeddingProvider& provider);

/// Mean (over H*W) L1 distance between the CbCr planes of the two
/// images, summed over both chroma channels.
double color_loss(const ImageRgb& fused, const ImageRgb& clean_vi);

/// Mean (over H*W) L1 distance of the fused image against the clean
/// visible image and the channel-replicated clean infrared image.
double l1_loss(const ImageRgb& fused, const ImageRgb& clean_vi,
               const ImageGray& clean_ir);

/// 2 - SSIM(fused, clean_vi) - SSIM(fused, clean_ir), Gaussian-windowed
/// on luminance with unit dynamic range; in [0,4].
double ssim_loss(const ImageRgb& fused, const ImageRgb& clean_vi,
                 const ImageGray& clean_ir);

LossReport total_loss(const ImageRgb& fused, const ImageRgb& clean_vi,
                      const ImageGray& clean_ir,
                      const std::string& clean_description,
                      const EmbeddingProvider& provider,
                      bool vlm_enabled = true);

// ---- graph builders ----------------------------------------------------------

struct LossNodes {
  ad::Value vlm;
  ad::Value color;
  ad::Value l1;
  ad::Value ssim;
  ad::Value total;
};

/// Windowed mean SSIM between two [1,H,W] planes (valid windows only;
/// window shrinks to the largest odd size that fits small inputs).
ad::Value ssim_mean_node(ad::Tape& t, ad::Value x, ad::Value y);

ad::Value color_loss_node(ad::Tape& t, ad::Value fused_rgb,
                          ad::Value clean_vi_rgb);
ad::Value l1_loss_node(ad::Tape& t, ad::Value fused_rgb, ad::Value clean_vi_rgb,
                       ad::Value clean_ir_gray);
ad::Value ssim_loss_node(ad::Tape& t, ad::Value fused_rgb,
                         ad::Value clean_vi_rgb, ad::Value clean_ir_gray);
ad::Value vlm_loss_node(ad::Tape& t, ad::Value fused_rgb,
                        const Tensor& clean_text_embedding,
                        const DifferentiableImageEncoder& encoder);

/// Builds all enabled components plus their sum. When `encoder` is null
/// (or vlm disabled) the vlm component is a constant zero.
LossNodes total_loss_node(ad::Tape& t, ad::Value fused_rgb,
                          ad::Value clean_vi_rgb, ad::Value clean_ir_gray,
                          const Tensor* clean_text_embedding,
                          const DifferentiableImageEncoder* encoder);

LossReport report_from_nodes(const ad::Tape& t, const LossNodes& nodes);

}  // namespace awm
