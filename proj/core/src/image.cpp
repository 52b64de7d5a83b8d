// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/image.hpp"

#include <algorithm>
#include <cmath>

namespace awm {

namespace {
void require_chw(const Tensor& t, int channels, const char* what) {
  if (t.rank() != 3 || t.dim(0) != channels || t.dim(1) < 1 || t.dim(2) < 1)
    throw ShapeMismatch(std::string(what) + ": expected [" +
                        std::to_string(channels) + ",H,W], got " +
                        t.shape_str());
}
}  // namespace

ImageRgb::ImageRgb(Tensor t) : pixels(std::move(t)) {
  require_chw(pixels, 3, "ImageRgb");
}

ImageGray::ImageGray(Tensor t) : pixels(std::move(t)) {
  require_chw(pixels, 1, "ImageGray");
}

// BT.601 full-range coefficients; Cb/Cr scales are exact reciprocals of
// the inverse transform so the round trip is lossless up to fp rounding.
Tensor rgb_to_ycbcr(const ImageRgb& img) {
  const int h = img.height(), w = img.width();
  Tensor out({3, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const double* r = img.pixels.data();
  const double* g = r + plane;
  const double* b = g + plane;
  double* y = out.data();
  double* cb = y + plane;
  double* cr = cb + plane;
  for (std::size_t i = 0; i < plane; ++i) {
    const double yy = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    y[i] = yy;
    cb[i] = 0.5 + (b[i] - yy) / 1.772;
    cr[i] = 0.5 + (r[i] - yy) / 1.402;
  }
  return out;
}

ImageRgb ycbcr_to_rgb(const Tensor& ycc) {
  require_chw(ycc, 3, "ycbcr_to_rgb");
  const int h = ycc.dim(1), w = ycc.dim(2);
  ImageRgb out(h, w);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const double* y = ycc.data();
  const double* cb = y + plane;
  const double* cr = cb + plane;
  double* r = out.pixels.data();
  double* g = r + plane;
  double* b = g + plane;
  for (std::size_t i = 0; i < plane; ++i) {
    const double pb = cb[i] - 0.5, pr = cr[i] - 0.5;
    r[i] = std::clamp(y[i] + 1.402 * pr, 0.0, 1.0);
    g[i] = std::clamp(y[i] - (0.114 * 1.772 / 0.587) * pb -
                          (0.299 * 1.402 / 0.587) * pr,
                      0.0, 1.0);
    b[i] = std::clamp(y[i] + 1.772 * pb, 0.0, 1.0);
  }
  return out;
}

Tensor luminance(const ImageRgb& img) {
  const int h = img.height(), w = img.width();
  Tensor out({1, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const double* r = img.pixels.data();
  const double* g = r + plane;
  const double* b = g + plane;
  for (std::size_t i = 0; i < plane; ++i)
    out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return out;
}

ImageRgb replicate_gray(const ImageGray& img) {
  const int h = img.height(), w = img.width();
  ImageRgb out(h, w);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < 3; ++c)
    std::copy(img.pixels.data(), img.pixels.data() + plane,
              out.pixels.data() + c * plane);
  return out;
}

Tensor crop(const Tensor& t, int top, int left, int height, int width) {
  if (t.rank() != 3) throw ShapeMismatch("crop expects [C,H,W]");
  if (top < 0 || left < 0 || top + height > t.dim(1) ||
      left + width > t.dim(2))
    throw CropTooLarge("crop window exceeds image bounds");
  Tensor out({t.dim(0), height, width});
  for (int c = 0; c < t.dim(0); ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        out.at(c, y, x) = t.at(c, top + y, left + x);
  return out;
}

ImagePair random_crop_pair(const ImagePair& pair, int size,
                           std::uint64_t seed) {
  const int h = pair.visible.height(), w = pair.visible.width();
  if (size > h || size > w)
    throw CropTooLarge("crop size " + std::to_string(size) + " exceeds " +
                       std::to_string(h) + "x" + std::to_string(w));
  Rng rng(seed);
  const int top = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - size + 1)));
  const int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - size + 1)));
  ImagePair out;
  out.id = pair.id;
  out.visible = ImageRgb(crop(pair.visible.pixels, top, left, size, size));
  out.infrared = ImageGray(crop(pair.infrared.pixels, top, left, size, size));
  if (pair.clean_visible)
    out.clean_visible =
        ImageRgb(crop(pair.clean_visible->pixels, top, left, size, size));
  if (pair.clean_infrared)
    out.clean_infrared =
        ImageGray(crop(pair.clean_infrared->pixels, top, left, size, size));
  return out;
}

Tensor pad_to_multiple_reflect(const Tensor& t, int multiple) {
  if (t.rank() != 3) throw ShapeMismatch("pad expects [C,H,W]");
  const int h = t.dim(1), w = t.dim(2);
  const int ph = (multiple - h % multiple) % multiple;
  const int pw = (multiple - w % multiple) % multiple;
  if (ph == 0 && pw == 0) return t;
  if (ph >= h || pw >= w)
    throw IndivisibleSpatialSize("image too small to reflect-pad to multiple of " +
                                 std::to_string(multiple));
  Tensor out({t.dim(0), h + ph, w + pw});
  for (int c = 0; c < t.dim(0); ++c)
    for (int y = 0; y < h + ph; ++y) {
      const int sy = y < h ? y : 2 * h - 2 - y;
      for (int x = 0; x < w + pw; ++x) {
        const int sx = x < w ? x : 2 * w - 2 - x;
        out.at(c, y, x) = t.at(c, sy, sx);
      }
    }
  return out;
}

void clamp01(Tensor& t) {
  for (double& v : t.vec()) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace awm
