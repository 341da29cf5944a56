// Copyright 2026 The weakmil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "weakmil/image.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include "weakmil/error.hpp"

namespace weakmil {

RgbImage::RgbImage(std::size_t width, std::size_t height, Rgb fill)
    : width_(width), height_(height), pixels_(3 * width * height) {
  for (std::size_t i = 0; i < width * height; ++i) {
    pixels_[3 * i] = fill[0];
    pixels_[3 * i + 1] = fill[1];
    pixels_[3 * i + 2] = fill[2];
  }
}

RgbImage RgbImage::Crop(std::size_t x0, std::size_t y0, std::size_t w,
                        std::size_t h) const {
  if (x0 + w > width_ || y0 + h > height_) {
    throw DimensionError("crop " + std::to_string(w) + "x" + std::to_string(h) +
                         " at (" + std::to_string(x0) + "," +
                         std::to_string(y0) + ") exceeds image " +
                         std::to_string(width_) + "x" + std::to_string(height_));
  }
  RgbImage out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    std::memcpy(out.px(0, y), px(x0, y0 + y), 3 * w);
  }
  return out;
}

std::uint8_t Luminance(const std::uint8_t* rgb) {
  const unsigned v = 299u * rgb[0] + 587u * rgb[1] + 114u * rgb[2];
  return static_cast<std::uint8_t>((v + 500u) / 1000u);
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void WritePng(const std::filesystem::path& path, const RgbImage& image) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open '" + path.string() + "' for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 3);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < image.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(image.px(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RgbImage ReadPng(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open '" + path.string() + "' for reading");

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("'" + path.string() + "' is not a PNG file");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  // Declared before setjmp so longjmp does not skip its lifetime.
  RgbImage image;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed reading PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const std::size_t w = png_get_image_width(png, info);
  const std::size_t h = png_get_image_height(png, info);
  image = RgbImage(w, h);
  for (std::size_t y = 0; y < h; ++y) png_read_row(png, image.px(0, y), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace weakmil
