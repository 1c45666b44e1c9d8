// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "segfuse/core.hpp"

namespace segfuse::io {

// SFPM probability rasters, all little-endian:
//   "SFPM" | u16 version = 1 | u32 C | u32 W | u32 H | C*W*H f32, plane-major.
inline constexpr std::uint16_t kSfpmVersion = 1;
inline constexpr std::size_t kSfpmHeaderSize = 18;

std::vector<std::uint8_t> encode_sfpm(const ProbMap& prob);

struct SfpmHeader {
  std::uint32_t classes;
  std::uint32_t width;
  std::uint32_t height;
  std::size_t payload_bytes() const noexcept {
    return static_cast<std::size_t>(classes) * width * height * sizeof(float);
  }
};

/// Validates magic and version of the first kSfpmHeaderSize bytes.
SfpmHeader decode_sfpm_header(std::span<const std::uint8_t> bytes);

/// Decodes a complete SFPM buffer. Throws BadMagic, BadVersion or TruncatedFile;
/// trailing bytes after the payload are BadFormat.
ProbMap decode_sfpm(std::span<const std::uint8_t> bytes);

ProbMap read_sfpm(const std::filesystem::path& path);
void write_sfpm(const ProbMap& prob, const std::filesystem::path& path);

// Label rasters: single-channel PNG. Written 8-bit unless a value or the ignore
// index exceeds 255, then 16-bit. Reading accepts 8/16-bit grayscale and
// palette-indexed files (indices taken verbatim).
LabelMap read_label_png(const std::filesystem::path& path, Label ignore_index = kDefaultIgnoreIndex);
void write_label_png(const LabelMap& labels, const std::filesystem::path& path);

/// Bit depth write_label_png chooses for this map.
int label_png_bit_depth(const LabelMap& labels) noexcept;

// RGB images. Any PNG colour type is converted to 8-bit RGB on read.
ImageRGB read_image_png(const std::filesystem::path& path);
void write_image_png(const ImageRGB& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace segfuse::io
