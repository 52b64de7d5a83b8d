// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace awm {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t quantize(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

void write_png(const Tensor& chw, const std::string& path) {
  const int channels = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open for writing: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng write error: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        row[static_cast<std::size_t>(x) * channels + c] =
            quantize(chw.data()[c * plane + static_cast<std::size_t>(y) * w + x]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor read_png(const std::string& path, int& channels) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open: " + path);
  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw UnsupportedFormat("not a PNG file: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng read error: " + path);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  // Normalize everything to 8-bit gray or RGB.
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  channels = static_cast<int>(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw UnsupportedFormat("unsupported channel count " +
                            std::to_string(channels) + ": " + path);
  }

  Tensor out({channels, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * channels);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        out.data()[c * plane + static_cast<std::size_t>(y) * w + x] =
            row[static_cast<std::size_t>(x) * channels + c] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

LoadedImage load_image(const std::string& path) {
  int channels = 0;
  Tensor t = read_png(path, channels);
  if (channels == 1) return ImageGray(std::move(t));
  return ImageRgb(std::move(t));
}

ImageRgb load_image_rgb(const std::string& path) {
  LoadedImage img = load_image(path);
  if (auto* rgb = std::get_if<ImageRgb>(&img)) return std::move(*rgb);
  // Gray promoted to RGB on request.
  return replicate_gray(std::get<ImageGray>(img));
}

ImageGray load_image_gray(const std::string& path) {
  LoadedImage img = load_image(path);
  if (auto* gray = std::get_if<ImageGray>(&img)) return std::move(*gray);
  return ImageGray(luminance(std::get<ImageRgb>(img)));
}

void save_image(const ImageRgb& img, const std::string& path) {
  write_png(img.pixels, path);
}

void save_image(const ImageGray& img, const std::string& path) {
  write_png(img.pixels, path);
}

}  // namespace awm
