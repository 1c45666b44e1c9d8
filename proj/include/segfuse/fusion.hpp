// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "segfuse/core.hpp"

namespace segfuse {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(int px, int py) const noexcept { return px >= x && px < x + w && py >= y && py < y + h; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct WindowParams {
  int window_w = 0;
  int window_h = 0;
  int stride_x = 0;
  int stride_y = 0;
};

struct TilePlan {
  WindowParams params;
  std::vector<Rect> windows;  // row-major scan order
};

/// Windows stepping by stride; the last one per axis is shifted back to end on the
/// border. A window larger than the image collapses to the full extent on that axis.
/// Strides larger than the window are clamped to the window so coverage holds.
TilePlan plan_tiles(int src_w, int src_h, int window_w, int window_h, int stride_x, int stride_y);
inline TilePlan plan_tiles(int src_w, int src_h, const WindowParams& p) {
  return plan_tiles(src_w, src_h, p.window_w, p.window_h, p.stride_x, p.stride_y);
}

struct Tile {
  Rect rect;
  ProbMap prob;
};

/// Overlap-averaged mosaic: per pixel, the sum of covering tiles divided by the
/// coverage count. Accumulation follows list order.
ProbMap fuse_tiles(std::span<const Tile> tiles, int canvas_w, int canvas_h, int num_classes, unsigned threads = 1);

/// A prediction producer: image in, per-pixel class distribution of the same dims out.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual ProbMap predict(const ImageRGB& image) const = 0;
  /// False if predict() must not be called from more than one thread at a time.
  virtual bool parallel_safe() const { return true; }
};

class FunctionPredictor final : public Predictor {
 public:
  using Fn = std::function<ProbMap(const ImageRGB&)>;
  explicit FunctionPredictor(Fn fn, bool parallel_safe = true) : fn_(std::move(fn)), parallel_safe_(parallel_safe) {}

  ProbMap predict(const ImageRGB& image) const override { return fn_(image); }
  bool parallel_safe() const override { return parallel_safe_; }

 private:
  Fn fn_;
  bool parallel_safe_;
};

ImageRGB crop_image(const ImageRGB& image, const Rect& rect);

/// Runs the predictor once per window of plan_tiles(image, params) and fuses the results.
ProbMap predict_tiled(const ImageRGB& image, const WindowParams& params, const Predictor& predictor,
                      unsigned threads = 1);

/// 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5
std::vector<double> default_tta_scales();

struct TtaConfig {
  std::vector<double> scales = default_tta_scales();
  bool horizontal_flip = false;
  std::optional<WindowParams> window;
  unsigned threads = 1;
};

/// Multi-scale (and optionally flipped) inference averaged on the original grid.
/// Variants run in order scale ascending, unflipped before flipped, and are reduced
/// in that order regardless of completion order.
ProbMap tta_aggregate(const ImageRGB& image, const TtaConfig& cfg, const Predictor& predictor);

}  // namespace segfuse
