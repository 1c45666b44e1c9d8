// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "segfuse/error.hpp"

namespace segfuse {

using Label = std::uint16_t;
inline constexpr Label kDefaultIgnoreIndex = 255;

/// Per-pixel class indices, row-major. Pixels equal to ignore_index() carry no class.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, Label fill = 0, Label ignore_index = kDefaultIgnoreIndex);
  LabelMap(int width, int height, std::vector<Label> data, Label ignore_index = kDefaultIgnoreIndex);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  Label ignore_index() const noexcept { return ignore_; }
  void set_ignore_index(Label ignore) noexcept { ignore_ = ignore; }

  Label at(int x, int y) const { return data_[index(x, y)]; }
  Label& at(int x, int y) { return data_[index(x, y)]; }

  std::span<const Label> data() const noexcept { return data_; }
  std::span<Label> data() noexcept { return data_; }

  /// Throws ClassOutOfRange unless every value is < num_classes or == ignore_index.
  void check_classes(int num_classes) const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  Label ignore_ = kDefaultIgnoreIndex;
  std::vector<Label> data_;
};

/// C probability planes over W x H, plane-major then row-major.
class ProbMap {
 public:
  ProbMap() = default;
  ProbMap(int num_classes, int width, int height, float fill = 0.0f);
  ProbMap(int num_classes, int width, int height, std::vector<float> data);

  int num_classes() const noexcept { return classes_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  float at(int c, int x, int y) const { return data_[index(c, x, y)]; }
  float& at(int c, int x, int y) { return data_[index(c, x, y)]; }

  std::span<const float> plane(int c) const noexcept {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(c) * pixels(), pixels());
  }
  std::span<float> plane(int c) noexcept {
    return std::span<float>(data_).subspan(static_cast<std::size_t>(c) * pixels(), pixels());
  }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  bool same_shape(const ProbMap& other) const noexcept {
    return classes_ == other.classes_ && width_ == other.width_ && height_ == other.height_;
  }

  /// True when every pixel's class sum is within tol of 1.
  bool is_normalized(float tol = 1e-4f) const noexcept;
  /// True when every value is finite and non-negative.
  bool is_valid() const noexcept;

  friend bool operator==(const ProbMap&, const ProbMap&) = default;

 private:
  std::size_t index(int c, int x, int y) const noexcept {
    return static_cast<std::size_t>(c) * pixels() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int classes_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// 8-bit RGB triples, row-major.
class ImageRGB {
 public:
  ImageRGB() = default;
  ImageRGB(int width, int height, std::uint8_t fill = 0);
  ImageRGB(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t at(int x, int y, int ch) const { return data_[index(x, y, ch)]; }
  std::uint8_t& at(int x, int y, int ch) { return data_[index(x, y, ch)]; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  friend bool operator==(const ImageRGB&, const ImageRGB&) = default;

 private:
  std::size_t index(int x, int y, int ch) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3 +
           static_cast<std::size_t>(ch);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Argmax over class planes; ties go to the smallest class index.
LabelMap argmax_labels(const ProbMap& prob, Label ignore_index = kDefaultIgnoreIndex);

/// One-hot encoding; ignore pixels become all-zero columns.
ProbMap one_hot(const LabelMap& labels, int num_classes);

// Bilinear with pixel centers aligned: src = (dst + 0.5) * in / out - 0.5, clamped to
// the valid range. Same dims returns a copy without resampling.
ProbMap resize_prob(const ProbMap& prob, int out_w, int out_h);
ImageRGB resize_image(const ImageRGB& image, int out_w, int out_h);

// Nearest neighbour: src = floor((dst + 0.5) * in / out).
LabelMap resize_labels(const LabelMap& labels, int out_w, int out_h);

ImageRGB flip_horizontal(const ImageRGB& image);
ProbMap flip_horizontal(const ProbMap& prob);
LabelMap flip_horizontal(const LabelMap& labels);

}  // namespace segfuse
