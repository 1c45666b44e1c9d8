// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// libpng reports errors by longjmp. Every function below keeps its C++ objects in the
// frame that calls setjmp, so no destructor is skipped when libpng jumps back.

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include "segfuse/io.hpp"

namespace segfuse::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f != nullptr) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "': " + std::strerror(errno));
  return f;
}

struct ErrorSlot {
  char message[256] = {0};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
  if (slot != nullptr) std::snprintf(slot->message, sizeof(slot->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void check_signature(std::FILE* f, const std::filesystem::path& path) {
  png_byte sig[8];
  if (std::fread(sig, 1, sizeof(sig), f) != sizeof(sig) || png_sig_cmp(sig, 0, sizeof(sig)) != 0)
    throw Error(Errc::BadFormat, "'" + path.string() + "' is not a PNG file");
}

}  // namespace

int label_png_bit_depth(const LabelMap& labels) noexcept {
  if (labels.ignore_index() > 255) return 16;
  for (Label v : labels.data())
    if (v > 255) return 16;
  return 8;
}

LabelMap read_label_png(const std::filesystem::path& path, Label ignore_index) {
  File file = open_file(path, "rb");
  check_signature(file.get(), path);

  ErrorSlot slot;
  std::vector<Label> data;
  std::vector<png_byte> row;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  if (png == nullptr) throw Error(Errc::IoFailure, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int depth = 0;
  int color = 0;
  bool bad_format = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::BadFormat, "'" + path.string() + "': " + slot.message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE) bad_format = true;
  if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) bad_format = true;
  if (width > 0x7fffffffu || height > 0x7fffffffu) bad_format = true;
  if (!bad_format) {
    if (depth < 8) png_set_packing(png);
    if (depth == 16) png_set_swap(png);
    png_read_update_info(png, info);
    const std::size_t bytes_per_sample = depth == 16 ? 2 : 1;
    row.resize(static_cast<std::size_t>(width) * bytes_per_sample);
    data.resize(static_cast<std::size_t>(width) * height);
    for (png_uint_32 y = 0; y < height; ++y) {
      png_read_row(png, row.data(), nullptr);
      Label* out = data.data() + static_cast<std::size_t>(y) * width;
      if (bytes_per_sample == 2) {
        for (png_uint_32 x = 0; x < width; ++x) std::memcpy(&out[x], &row[2 * x], 2);
      } else {
        for (png_uint_32 x = 0; x < width; ++x) out[x] = row[x];
      }
    }
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (bad_format)
    throw Error(Errc::BadFormat, "'" + path.string() + "' must be a non-interlaced single-channel PNG (got colour type " +
                                     std::to_string(color) + ", bit depth " + std::to_string(depth) + ")");
  return LabelMap(static_cast<int>(width), static_cast<int>(height), std::move(data), ignore_index);
}

void write_label_png(const LabelMap& labels, const std::filesystem::path& path) {
  if (labels.empty()) throw Error(Errc::EmptyInput, "cannot write an empty label map");
  File file = open_file(path, "wb");
  const int depth = label_png_bit_depth(labels);
  const std::size_t width = static_cast<std::size_t>(labels.width());

  ErrorSlot slot;
  std::vector<png_byte> row(width * (depth == 16 ? 2 : 1));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  if (png == nullptr) throw Error(Errc::IoFailure, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::IoFailure, "'" + path.string() + "': " + slot.message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(labels.width()), static_cast<png_uint_32>(labels.height()), depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto values = labels.data();
  for (int y = 0; y < labels.height(); ++y) {
    const Label* src = values.data() + static_cast<std::size_t>(y) * width;
    if (depth == 16) {
      for (std::size_t x = 0; x < width; ++x) {
        row[2 * x] = static_cast<png_byte>(src[x] >> 8);
        row[2 * x + 1] = static_cast<png_byte>(src[x] & 0xff);
      }
    } else {
      for (std::size_t x = 0; x < width; ++x) row[x] = static_cast<png_byte>(src[x]);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw Error(Errc::IoFailure, "write error on '" + path.string() + "'");
}

ImageRGB read_image_png(const std::filesystem::path& path) {
  File file = open_file(path, "rb");
  check_signature(file.get(), path);

  ErrorSlot slot;
  std::vector<std::uint8_t> data;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  if (png == nullptr) throw Error(Errc::IoFailure, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::BadFormat, "'" + path.string() + "': " + slot.message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  const int passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);
  data.resize(static_cast<std::size_t>(width) * height * 3);
  for (int pass = passes; pass > 0; --pass) {
    for (png_uint_32 y = 0; y < height; ++y) png_read_row(png, data.data() + static_cast<std::size_t>(y) * width * 3, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return ImageRGB(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

void write_image_png(const ImageRGB& image, const std::filesystem::path& path) {
  if (image.empty()) throw Error(Errc::EmptyInput, "cannot write an empty image");
  File file = open_file(path, "wb");
  ErrorSlot slot;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  if (png == nullptr) throw Error(Errc::IoFailure, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::IoFailure, "'" + path.string() + "': " + slot.message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(image.width()) * 3;
  for (int y = 0; y < image.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(image.data().data() + static_cast<std::size_t>(y) * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw Error(Errc::IoFailure, "write error on '" + path.string() + "'");
}

}  // namespace segfuse::io
