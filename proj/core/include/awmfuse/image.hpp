// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "awmfuse/tensor.hpp"

namespace awm {

/// RGB image, values in [0,1], stored channel-major as [3,H,W].
struct ImageRgb {
  Tensor pixels;  // [3,H,W]

  ImageRgb() = default;
  ImageRgb(int height, int width) : pixels({3, height, width}) {}
  explicit ImageRgb(Tensor t);

  int height() const { return pixels.dim(1); }
  int width() const { return pixels.dim(2); }
};

/// Single-channel intensity image, values in [0,1], stored as [1,H,W].
struct ImageGray {
  Tensor pixels;  // [1,H,W]

  ImageGray() = default;
  ImageGray(int height, int width) : pixels({1, height, width}) {}
  explicit ImageGray(Tensor t);

  int height() const { return pixels.dim(1); }
  int width() const { return pixels.dim(2); }
};

/// Registered visible/infrared frame pair, optionally carrying the clean
/// counterparts when the pair came out of the synthetic degradation
/// pipeline (or any paired dataset).
struct ImagePair {
  ImageRgb visible;
  ImageGray infrared;
  std::optional<ImageRgb> clean_visible;
  std::optional<ImageGray> clean_infrared;
  std::string id;
};

/// BT.601 full-range RGB -> YCbCr; all three planes in [0,1] with the
/// chroma zero point at 0.5. Exactly inverted by ycbcr_to_rgb.
Tensor rgb_to_ycbcr(const ImageRgb& img);

/// Inverse of rgb_to_ycbcr, clamped to [0,1].
ImageRgb ycbcr_to_rgb(const Tensor& ycc);

/// BT.601 luma plane, [1,H,W].
Tensor luminance(const ImageRgb& img);

/// Replicates a single-channel image to [3,H,W].
ImageRgb replicate_gray(const ImageGray& img);

/// Same random window applied to every image of the pair. Deterministic
/// for a fixed seed. Throws CropTooLarge if `size` exceeds either
/// dimension.
ImagePair random_crop_pair(const ImagePair& pair, int size, std::uint64_t seed);

/// Pure windowing crop of a [C,H,W] tensor.
Tensor crop(const Tensor& t, int top, int left, int height, int width);

/// Reflect-pads a [C,H,W] tensor on the bottom/right so both spatial
/// dims become multiples of `multiple`.
Tensor pad_to_multiple_reflect(const Tensor& t, int multiple);

void clamp01(Tensor& t);

}  // namespace awm
