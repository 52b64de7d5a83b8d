// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <variant>

#include "awmfuse/image.hpp"

namespace awm {

using LoadedImage = std::variant<ImageRgb, ImageGray>;

/// Loads an 8-bit PNG. Grayscale files come back as ImageGray, color
/// files as ImageRgb (alpha is dropped, palette expanded). Throws
/// IoError / UnsupportedFormat.
LoadedImage load_image(const std::string& path);

ImageRgb load_image_rgb(const std::string& path);
ImageGray load_image_gray(const std::string& path);

/// Writes an 8-bit PNG. Values are clamped to [0,1] and quantized with
/// round-to-nearest, so a save/load round trip is exact after the first
/// quantization (error <= 1/510 per channel against the original).
void save_image(const ImageRgb& img, const std::string& path);
void save_image(const ImageGray& img, const std::string& path);

}  // namespace awm
