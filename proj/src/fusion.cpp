// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "segfuse/ensemble.hpp"
#include "segfuse/kernels.hpp"
#include "segfuse/parallel.hpp"

namespace segfuse {
namespace {

std::vector<int> axis_positions(int size, int window, int stride) {
  if (window >= size) return {0};
  stride = std::min(stride, window);
  std::vector<int> positions;
  for (int p = 0;; p += stride) {
    if (p + window >= size) {
      positions.push_back(size - window);
      break;
    }
    positions.push_back(p);
  }
  return positions;
}

std::string dims(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

ProbMap run_predictor(const Predictor& predictor, const ImageRGB& input) {
  ProbMap out;
  try {
    out = predictor.predict(input);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::PredictorError, std::string("predictor failed: ") + e.what());
  }
  if (out.width() != input.width() || out.height() != input.height())
    throw Error(Errc::DimMismatch, "predictor returned " + dims(out.width(), out.height()) + " for a " +
                                       dims(input.width(), input.height()) + " input");
  if (out.num_classes() < 1) throw Error(Errc::DimMismatch, "predictor returned no classes");
  return out;
}

}  // namespace

TilePlan plan_tiles(int src_w, int src_h, int window_w, int window_h, int stride_x, int stride_y) {
  if (src_w < 1 || src_h < 1 || window_w < 1 || window_h < 1 || stride_x < 1 || stride_y < 1)
    throw Error(Errc::InvalidGeometry, "tile geometry needs positive image, window and stride dims");
  TilePlan plan;
  plan.params = {window_w, window_h, stride_x, stride_y};
  const int w = std::min(window_w, src_w);
  const int h = std::min(window_h, src_h);
  const auto xs = axis_positions(src_w, window_w, stride_x);
  const auto ys = axis_positions(src_h, window_h, stride_y);
  plan.windows.reserve(xs.size() * ys.size());
  for (int y : ys)
    for (int x : xs) plan.windows.push_back({x, y, w, h});
  return plan;
}

ProbMap fuse_tiles(std::span<const Tile> tiles, int canvas_w, int canvas_h, int num_classes, unsigned threads) {
  if (canvas_w < 1 || canvas_h < 1 || num_classes < 1)
    throw Error(Errc::DimMismatch, "fuse canvas needs positive dims and class count");
  const std::size_t n = static_cast<std::size_t>(canvas_w) * static_cast<std::size_t>(canvas_h);
  std::vector<float> coverage(n, 0.0f);
  for (const Tile& t : tiles) {
    const Rect& r = t.rect;
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > canvas_w || r.y + r.h > canvas_h)
      throw Error(Errc::DimMismatch, "tile rectangle lies outside the canvas");
    if (t.prob.width() != r.w || t.prob.height() != r.h)
      throw Error(Errc::DimMismatch, "tile map is " + dims(t.prob.width(), t.prob.height()) + ", rectangle is " +
                                         dims(r.w, r.h));
    if (t.prob.num_classes() != num_classes) throw Error(Errc::DimMismatch, "tile class count differs");
    for (int y = r.y; y < r.y + r.h; ++y) {
      float* row = coverage.data() + static_cast<std::size_t>(y) * canvas_w;
      for (int x = r.x; x < r.x + r.w; ++x) row[x] += 1.0f;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (coverage[i] == 0.0f)
      throw Error(Errc::CoverageGap, "pixel (" + std::to_string(i % canvas_w) + ", " + std::to_string(i / canvas_w) +
                                         ") is covered by no tile");
  }

  ProbMap out(num_classes, canvas_w, canvas_h, 0.0f);
  const auto& kern = kernels::active();
  parallel_for(static_cast<std::size_t>(num_classes), threads, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      auto dst = out.plane(static_cast<int>(c));
      for (const Tile& t : tiles) {
        auto src = t.prob.plane(static_cast<int>(c));
        for (int y = 0; y < t.rect.h; ++y) {
          float* acc = dst.data() + static_cast<std::size_t>(t.rect.y + y) * canvas_w + t.rect.x;
          kern.accumulate(acc, src.data() + static_cast<std::size_t>(y) * t.rect.w, 1.0f,
                          static_cast<std::size_t>(t.rect.w));
        }
      }
      kern.divide(dst.data(), coverage.data(), n);
    }
  });
  return out;
}

ImageRGB crop_image(const ImageRGB& image, const Rect& rect) {
  if (rect.w < 1 || rect.h < 1 || rect.x < 0 || rect.y < 0 || rect.x + rect.w > image.width() ||
      rect.y + rect.h > image.height())
    throw Error(Errc::InvalidGeometry, "crop rectangle lies outside the image");
  ImageRGB out(rect.w, rect.h);
  const std::size_t row_bytes = static_cast<std::size_t>(rect.w) * 3;
  for (int y = 0; y < rect.h; ++y) {
    const auto* src = image.data().data() + (static_cast<std::size_t>(rect.y + y) * image.width() + rect.x) * 3;
    std::copy_n(src, row_bytes, out.data().data() + static_cast<std::size_t>(y) * row_bytes);
  }
  return out;
}

ProbMap predict_tiled(const ImageRGB& image, const WindowParams& params, const Predictor& predictor,
                      unsigned threads) {
  if (image.empty()) throw Error(Errc::EmptyInput, "tiled prediction of an empty image");
  const TilePlan plan = plan_tiles(image.width(), image.height(), params);
  std::vector<Tile> tiles(plan.windows.size());
  unsigned workers = predictor.parallel_safe() ? threads : 1;
  parallel_for(tiles.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      tiles[i].rect = plan.windows[i];
      tiles[i].prob = run_predictor(predictor, crop_image(image, plan.windows[i]));
    }
  });
  const int classes = tiles.front().prob.num_classes();
  return fuse_tiles(tiles, image.width(), image.height(), classes, threads);
}

std::vector<double> default_tta_scales() { return {0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5}; }

ProbMap tta_aggregate(const ImageRGB& image, const TtaConfig& cfg, const Predictor& predictor) {
  if (image.empty()) throw Error(Errc::EmptyInput, "test-time augmentation of an empty image");
  if (cfg.scales.empty()) throw Error(Errc::InvalidParams, "at least one scale is required");
  for (double s : cfg.scales)
    if (!(s > 0.0 && s <= 8.0)) throw Error(Errc::InvalidParams, "scales must lie in (0, 8]");

  struct Variant {
    double scale;
    bool flipped;
  };
  std::vector<double> scales = cfg.scales;
  std::stable_sort(scales.begin(), scales.end());
  std::vector<Variant> variants;
  for (double s : scales) {
    variants.push_back({s, false});
    if (cfg.horizontal_flip) variants.push_back({s, true});
  }

  const int w = image.width();
  const int h = image.height();
  std::vector<ProbMap> results(variants.size());
  const bool concurrent = predictor.parallel_safe() && resolve_threads(cfg.threads) > 1 && variants.size() > 1;
  unsigned outer = concurrent ? cfg.threads : 1;
  unsigned inner = concurrent ? 1 : cfg.threads;

  parallel_for(variants.size(), outer, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Variant& v = variants[i];
      int sw = std::max(1, static_cast<int>(std::lround(w * v.scale)));
      int sh = std::max(1, static_cast<int>(std::lround(h * v.scale)));
      ImageRGB input = resize_image(image, sw, sh);
      if (v.flipped) input = flip_horizontal(input);
      ProbMap prob = cfg.window ? predict_tiled(input, *cfg.window, predictor, inner) : run_predictor(predictor, input);
      if (v.flipped) prob = flip_horizontal(prob);
      results[i] = resize_prob(prob, w, h);
    }
  });

  for (const ProbMap& r : results)
    if (r.num_classes() != results.front().num_classes())
      throw Error(Errc::DimMismatch, "predictor class count changed between variants");
  if (results.size() == 1) return std::move(results.front());
  return soft_average(results);
}

}  // namespace segfuse
