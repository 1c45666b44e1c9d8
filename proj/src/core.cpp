// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segfuse/kernels.hpp"

namespace segfuse {
namespace {

std::size_t area(int w, int h) {
  if (w < 0 || h < 0) throw Error(Errc::InvalidGeometry, "negative raster dimensions");
  return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
}

void require_dims(int w, int h) {
  if (w < 1 || h < 1)
    throw Error(Errc::EmptyInput, "output dimensions must be >= 1, got " + std::to_string(w) + "x" + std::to_string(h));
}

// Per-axis bilinear taps with centers aligned.
struct Tap {
  int i0;
  int i1;
  float frac;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int d = 0; d < out; ++d) {
    double src = (d + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    int i0 = static_cast<int>(std::floor(src));
    int i1 = std::min(i0 + 1, in - 1);
    taps[static_cast<std::size_t>(d)] = {i0, i1, static_cast<float>(src - i0)};
  }
  return taps;
}

std::vector<int> nearest_taps(int in, int out) {
  std::vector<int> taps(static_cast<std::size_t>(out));
  for (int d = 0; d < out; ++d) {
    // floor((d + 0.5) * in / out) in exact integer arithmetic
    long long src = ((2LL * d + 1) * in) / (2LL * out);
    taps[static_cast<std::size_t>(d)] = static_cast<int>(std::min<long long>(src, in - 1));
  }
  return taps;
}

// a + t (b - a), clamped so the result never leaves [min(a,b), max(a,b)].
inline float lerp_bounded(float a, float b, float t) {
  float v = a + t * (b - a);
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

}  // namespace

LabelMap::LabelMap(int width, int height, Label fill, Label ignore_index)
    : width_(width), height_(height), ignore_(ignore_index), data_(area(width, height), fill) {}

LabelMap::LabelMap(int width, int height, std::vector<Label> data, Label ignore_index)
    : width_(width), height_(height), ignore_(ignore_index), data_(std::move(data)) {
  if (data_.size() != area(width, height)) throw Error(Errc::DimMismatch, "label data length does not match dims");
}

void LabelMap::check_classes(int num_classes) const {
  for (Label v : data_) {
    if (v != ignore_ && static_cast<int>(v) >= num_classes)
      throw Error(Errc::ClassOutOfRange,
                  "label " + std::to_string(v) + " outside [0, " + std::to_string(num_classes) + ")");
  }
}

ProbMap::ProbMap(int num_classes, int width, int height, float fill)
    : classes_(num_classes), width_(width), height_(height) {
  if (num_classes < 0) throw Error(Errc::InvalidGeometry, "negative class count");
  data_.assign(static_cast<std::size_t>(num_classes) * area(width, height), fill);
}

ProbMap::ProbMap(int num_classes, int width, int height, std::vector<float> data)
    : classes_(num_classes), width_(width), height_(height), data_(std::move(data)) {
  if (num_classes < 0) throw Error(Errc::InvalidGeometry, "negative class count");
  if (data_.size() != static_cast<std::size_t>(num_classes) * area(width, height))
    throw Error(Errc::DimMismatch, "probability data length does not match dims");
}

bool ProbMap::is_normalized(float tol) const noexcept {
  const std::size_t n = pixels();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < classes_; ++c) sum += data_[static_cast<std::size_t>(c) * n + i];
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

bool ProbMap::is_valid() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v) && v >= 0.0f; });
}

ImageRGB::ImageRGB(int width, int height, std::uint8_t fill)
    : width_(width), height_(height), data_(area(width, height) * 3, fill) {}

ImageRGB::ImageRGB(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != area(width, height) * 3) throw Error(Errc::DimMismatch, "image data length does not match dims");
}

LabelMap argmax_labels(const ProbMap& prob, Label ignore_index) {
  if (prob.num_classes() == 0 || prob.pixels() == 0) throw Error(Errc::EmptyInput, "argmax of an empty probability map");
  LabelMap out(prob.width(), prob.height(), 0, ignore_index);
  kernels::active().argmax(prob.data().data(), static_cast<std::size_t>(prob.num_classes()), prob.pixels(),
                           out.data().data());
  return out;
}

ProbMap one_hot(const LabelMap& labels, int num_classes) {
  if (num_classes < 1) throw Error(Errc::EmptyInput, "one-hot needs at least one class");
  labels.check_classes(num_classes);
  ProbMap out(num_classes, labels.width(), labels.height(), 0.0f);
  const std::size_t n = labels.size();
  auto values = labels.data();
  auto data = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] == labels.ignore_index()) continue;
    data[static_cast<std::size_t>(values[i]) * n + i] = 1.0f;
  }
  return out;
}

ProbMap resize_prob(const ProbMap& prob, int out_w, int out_h) {
  if (prob.empty()) throw Error(Errc::EmptyInput, "resize of an empty probability map");
  require_dims(out_w, out_h);
  if (out_w == prob.width() && out_h == prob.height()) return prob;

  const auto xs = bilinear_taps(prob.width(), out_w);
  const auto ys = bilinear_taps(prob.height(), out_h);
  ProbMap out(prob.num_classes(), out_w, out_h);
  const int in_w = prob.width();
  for (int c = 0; c < prob.num_classes(); ++c) {
    auto src = prob.plane(c);
    auto dst = out.plane(c);
    for (int y = 0; y < out_h; ++y) {
      const Tap& ty = ys[static_cast<std::size_t>(y)];
      const float* r0 = src.data() + static_cast<std::size_t>(ty.i0) * in_w;
      const float* r1 = src.data() + static_cast<std::size_t>(ty.i1) * in_w;
      float* row = dst.data() + static_cast<std::size_t>(y) * out_w;
      for (int x = 0; x < out_w; ++x) {
        const Tap& tx = xs[static_cast<std::size_t>(x)];
        float top = lerp_bounded(r0[tx.i0], r0[tx.i1], tx.frac);
        float bottom = lerp_bounded(r1[tx.i0], r1[tx.i1], tx.frac);
        row[x] = lerp_bounded(top, bottom, ty.frac);
      }
    }
  }
  return out;
}

ImageRGB resize_image(const ImageRGB& image, int out_w, int out_h) {
  if (image.empty()) throw Error(Errc::EmptyInput, "resize of an empty image");
  require_dims(out_w, out_h);
  if (out_w == image.width() && out_h == image.height()) return image;

  const auto xs = bilinear_taps(image.width(), out_w);
  const auto ys = bilinear_taps(image.height(), out_h);
  ImageRGB out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_w; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      for (int ch = 0; ch < 3; ++ch) {
        float top = lerp_bounded(image.at(tx.i0, ty.i0, ch), image.at(tx.i1, ty.i0, ch), tx.frac);
        float bottom = lerp_bounded(image.at(tx.i0, ty.i1, ch), image.at(tx.i1, ty.i1, ch), tx.frac);
        float v = lerp_bounded(top, bottom, ty.frac);
        out.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

LabelMap resize_labels(const LabelMap& labels, int out_w, int out_h) {
  if (labels.empty()) throw Error(Errc::EmptyInput, "resize of an empty label map");
  require_dims(out_w, out_h);
  if (out_w == labels.width() && out_h == labels.height()) return labels;

  const auto xs = nearest_taps(labels.width(), out_w);
  const auto ys = nearest_taps(labels.height(), out_h);
  LabelMap out(out_w, out_h, 0, labels.ignore_index());
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      out.at(x, y) = labels.at(xs[static_cast<std::size_t>(x)], ys[static_cast<std::size_t>(y)]);
  return out;
}

ImageRGB flip_horizontal(const ImageRGB& image) {
  ImageRGB out(image.width(), image.height());
  const int w = image.width();
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = image.at(w - 1 - x, y, ch);
  return out;
}

ProbMap flip_horizontal(const ProbMap& prob) {
  ProbMap out(prob.num_classes(), prob.width(), prob.height());
  const int w = prob.width();
  for (int c = 0; c < prob.num_classes(); ++c)
    for (int y = 0; y < prob.height(); ++y)
      for (int x = 0; x < w; ++x) out.at(c, x, y) = prob.at(c, w - 1 - x, y);
  return out;
}

LabelMap flip_horizontal(const LabelMap& labels) {
  LabelMap out(labels.width(), labels.height(), 0, labels.ignore_index());
  const int w = labels.width();
  for (int y = 0; y < labels.height(); ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = labels.at(w - 1 - x, y);
  return out;
}

}  // namespace segfuse
