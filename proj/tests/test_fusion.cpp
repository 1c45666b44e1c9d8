// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <cstring>
#include <stdexcept>

#include "segfuse/error.hpp"
#include "segfuse/fusion.hpp"
#include "support.hpp"

using namespace segfuse;
using segfuse::test::Gen;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Usage;
}

// Class distribution depends only on the pixel's colour, so the predictor commutes
// with crops and flips.
ProbMap colour_predictor(const ImageRGB& img, int classes) {
  ProbMap p(classes, img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      float sum = 0.0f;
      for (int c = 0; c < classes; ++c) sum += p.at(c, x, y) = 1.0f + static_cast<float>(img.at(x, y, c % 3) * (c + 1) % 7);
      for (int c = 0; c < classes; ++c) p.at(c, x, y) /= sum;
    }
  return p;
}

ProbMap crop_prob(const ProbMap& p, const Rect& r) {
  ProbMap out(p.num_classes(), r.w, r.h);
  for (int c = 0; c < p.num_classes(); ++c)
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x) out.at(c, x, y) = p.at(c, r.x + x, r.y + y);
  return out;
}

bool bit_equal(const ProbMap& a, const ProbMap& b) {
  return a.same_shape(b) && std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(float)) == 0;
}

void check_close(const ProbMap& a, const ProbMap& b, double tol) {
  REQUIRE(a.same_shape(b));
  for (std::size_t i = 0; i < a.data().size(); ++i) REQUIRE(std::abs(a.data()[i] - b.data()[i]) <= tol);
}

}  // namespace

TEST_CASE("plan example: 10 wide, window 6, stride 4") {
  TilePlan plan = plan_tiles(10, 1, 6, 1, 4, 1);
  REQUIRE(plan.windows.size() == 2);
  CHECK(plan.windows[0] == Rect{0, 0, 6, 1});
  CHECK(plan.windows[1] == Rect{4, 0, 6, 1});
}

TEST_CASE("a window at least as large as the image gives one full window") {
  TilePlan plan = plan_tiles(896, 896, 896, 896, 448, 448);
  REQUIRE(plan.windows.size() == 1);
  CHECK(plan.windows[0] == Rect{0, 0, 896, 896});
  TilePlan big = plan_tiles(5, 3, 8, 8, 2, 2);
  REQUIRE(big.windows.size() == 1);
  CHECK(big.windows[0] == Rect{0, 0, 5, 3});
}

TEST_CASE("exhaustive coverage for small geometries") {
  for (int size = 1; size <= 32; ++size)
    for (int win = 1; win <= 8; ++win)
      for (int stride = 1; stride <= 8; ++stride) {
        TilePlan plan = plan_tiles(size, 1, win, 1, stride, 1);
        std::vector<int> cover(static_cast<std::size_t>(size), 0);
        int prev = -1;
        for (const Rect& r : plan.windows) {
          REQUIRE(r.x >= 0);
          REQUIRE(r.x + r.w <= size);
          REQUIRE(r.w == std::min(win, size));
          REQUIRE(r.x > prev);
          REQUIRE(r.x - std::max(prev, 0) <= std::max(stride, 1));
          prev = r.x;
          for (int x = r.x; x < r.x + r.w; ++x) ++cover[static_cast<std::size_t>(x)];
        }
        CAPTURE(size);
        CAPTURE(win);
        CAPTURE(stride);
        REQUIRE(plan.windows.front().x == 0);
        REQUIRE(plan.windows.back().x + plan.windows.back().w == size);
        for (int c : cover) REQUIRE(c >= 1);
      }
}

TEST_CASE("two-dimensional plans scan row-major") {
  TilePlan plan = plan_tiles(7, 5, 4, 3, 3, 2);
  REQUIRE(plan.windows.size() == 4);
  CHECK(plan.windows[0] == Rect{0, 0, 4, 3});
  CHECK(plan.windows[1] == Rect{3, 0, 4, 3});
  CHECK(plan.windows[2] == Rect{0, 2, 4, 3});
  CHECK(plan.windows[3] == Rect{3, 2, 4, 3});
}

TEST_CASE("plan errors") {
  CHECK(code_of([] { plan_tiles(0, 4, 2, 2, 1, 1); }) == Errc::InvalidGeometry);
  CHECK(code_of([] { plan_tiles(4, 4, 0, 2, 1, 1); }) == Errc::InvalidGeometry);
  CHECK(code_of([] { plan_tiles(4, 4, 2, 2, 0, 1); }) == Errc::InvalidGeometry);
}

TEST_CASE("overlap averaging example") {
  std::vector<Tile> tiles = {
      {{0, 0, 2, 1}, ProbMap(2, 2, 1, std::vector<float>{1.0f, 0.6f, 0.0f, 0.4f})},
      {{1, 0, 1, 1}, ProbMap(2, 1, 1, std::vector<float>{0.2f, 0.8f})},
  };
  ProbMap f = fuse_tiles(tiles, 2, 1, 2);
  CHECK(f.at(0, 0, 0) == 1.0f);
  CHECK(f.at(0, 1, 0) == doctest::Approx(0.4));
  CHECK(f.at(1, 1, 0) == doctest::Approx(0.6));
}

TEST_CASE("a single full-canvas tile and an exact partition are bit-exact") {
  Gen g(41);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = g.range(1, 40);
    const int h = g.range(1, 30);
    ProbMap mosaic = test::random_prob(g, g.range(1, 5), w, h);
    std::vector<Tile> whole = {{{0, 0, w, h}, mosaic}};
    REQUIRE(bit_equal(fuse_tiles(whole, w, h, mosaic.num_classes()), mosaic));

    std::vector<int> xs = {0};
    std::vector<int> ys = {0};
    for (int x = 1; x < w; ++x)
      if (g.coin(0.2)) xs.push_back(x);
    for (int y = 1; y < h; ++y)
      if (g.coin(0.2)) ys.push_back(y);
    xs.push_back(w);
    ys.push_back(h);
    std::vector<Tile> parts;
    for (std::size_t j = 0; j + 1 < ys.size(); ++j)
      for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        Rect r{xs[i], ys[j], xs[i + 1] - xs[i], ys[j + 1] - ys[j]};
        parts.push_back({r, crop_prob(mosaic, r)});
      }
    REQUIRE(bit_equal(fuse_tiles(parts, w, h, mosaic.num_classes(), static_cast<unsigned>(g.range(1, 4))), mosaic));
  }
}

TEST_CASE("fused overlapping tiles stay normalized and ignore thread count") {
  Gen g(42);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = g.range(4, 50);
    const int h = g.range(4, 50);
    const int c = g.range(1, 6);
    TilePlan plan = plan_tiles(w, h, g.range(2, 12), g.range(2, 12), g.range(1, 6), g.range(1, 6));
    std::vector<Tile> tiles;
    for (const Rect& r : plan.windows) tiles.push_back({r, test::random_prob(g, c, r.w, r.h)});
    ProbMap one = fuse_tiles(tiles, w, h, c, 1);
    REQUIRE(test::max_sum_error(one) < 1e-4);
    REQUIRE(bit_equal(fuse_tiles(tiles, w, h, c, 3), one));
  }
}

TEST_CASE("fuse errors") {
  std::vector<Tile> gap = {{{0, 0, 1, 1}, ProbMap(1, 1, 1, 1.0f)}};
  CHECK(code_of([&] { fuse_tiles(gap, 2, 1, 1); }) == Errc::CoverageGap);
  std::vector<Tile> outside = {{{1, 0, 2, 1}, ProbMap(1, 2, 1, 1.0f)}};
  CHECK(code_of([&] { fuse_tiles(outside, 2, 1, 1); }) == Errc::DimMismatch);
  std::vector<Tile> wrong = {{{0, 0, 2, 1}, ProbMap(1, 1, 1, 1.0f)}};
  CHECK(code_of([&] { fuse_tiles(wrong, 2, 1, 1); }) == Errc::DimMismatch);
  std::vector<Tile> classes = {{{0, 0, 1, 1}, ProbMap(2, 1, 1, 0.5f)}};
  CHECK(code_of([&] { fuse_tiles(classes, 1, 1, 3); }) == Errc::DimMismatch);
}

TEST_CASE("tiled prediction of a pointwise predictor equals whole-image prediction") {
  Gen g(43);
  FunctionPredictor pred([](const ImageRGB& img) { return colour_predictor(img, 4); });
  for (int trial = 0; trial < 20; ++trial) {
    ImageRGB img = test::random_image(g, g.range(3, 40), g.range(3, 40));
    WindowParams wp{g.range(2, 16), g.range(2, 16), g.range(1, 10), g.range(1, 10)};
    ProbMap tiled = predict_tiled(img, wp, pred, static_cast<unsigned>(g.range(1, 3)));
    check_close(tiled, colour_predictor(img, 4), 1e-6);
  }
}

TEST_CASE("crop_image copies the rectangle") {
  Gen g(44);
  ImageRGB img = test::random_image(g, 6, 5);
  ImageRGB c = crop_image(img, {2, 1, 3, 2});
  REQUIRE(c.width() == 3);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x)
      for (int ch = 0; ch < 3; ++ch) CHECK(c.at(x, y, ch) == img.at(x + 2, y + 1, ch));
  CHECK_THROWS_AS(crop_image(img, {4, 0, 3, 1}), Error);
}

TEST_CASE("default TTA scales") {
  CHECK(default_tta_scales() == std::vector<double>{0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5});
}

TEST_CASE("tta at scale 1 without flip is bit-exact identity") {
  Gen g(45);
  for (int trial = 0; trial < 10; ++trial) {
    ProbMap fixed = test::random_prob(g, 3, 9, 7);
    FunctionPredictor pred([&](const ImageRGB&) { return fixed; });
    TtaConfig cfg;
    cfg.scales = {1.0};
    REQUIRE(bit_equal(tta_aggregate(ImageRGB(9, 7), cfg, pred), fixed));
  }
}

TEST_CASE("tta of a constant predictor is constant and normalized") {
  FunctionPredictor pred([](const ImageRGB& img) {
    ProbMap p(3, img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        p.at(0, x, y) = 0.5f;
        p.at(1, x, y) = 0.3f;
        p.at(2, x, y) = 0.2f;
      }
    return p;
  });
  TtaConfig cfg;
  cfg.horizontal_flip = true;
  cfg.threads = 2;
  ProbMap out = tta_aggregate(ImageRGB(33, 21, 7), cfg, pred);
  REQUIRE(out.width() == 33);
  REQUIRE(out.height() == 21);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 33; ++x) {
      CHECK(out.at(0, x, y) == doctest::Approx(0.5).epsilon(1e-6));
      CHECK(out.at(2, x, y) == doctest::Approx(0.2).epsilon(1e-6));
    }
  CHECK(test::max_sum_error(out) < 1e-4);
}

TEST_CASE("flipping a flip-equivariant predictor changes nothing") {
  Gen g(46);
  FunctionPredictor pred([](const ImageRGB& img) { return colour_predictor(img, 5); });
  ImageRGB img = test::random_image(g, 17, 11);
  TtaConfig plain;
  plain.scales = {1.0};
  TtaConfig flipped = plain;
  flipped.horizontal_flip = true;
  check_close(tta_aggregate(img, flipped, pred), tta_aggregate(img, plain, pred), 1e-6);
}

TEST_CASE("tta is normalized and independent of thread count") {
  Gen g(47);
  FunctionPredictor pred([](const ImageRGB& img) { return colour_predictor(img, 4); });
  for (int trial = 0; trial < 8; ++trial) {
    ImageRGB img = test::random_image(g, g.range(8, 40), g.range(8, 40));
    TtaConfig cfg;
    cfg.scales = {0.5, 1.0, 1.5};
    cfg.horizontal_flip = g.coin();
    if (g.coin()) cfg.window = WindowParams{8, 8, 5, 5};
    ProbMap a = tta_aggregate(img, cfg, pred);
    cfg.threads = 3;
    REQUIRE(bit_equal(tta_aggregate(img, cfg, pred), a));
    REQUIRE(test::max_sum_error(a) < 1e-4);
  }
}

TEST_CASE("serial predictors are never called concurrently") {
  std::atomic<int> inside{0};
  std::atomic<int> worst{0};
  FunctionPredictor pred(
      [&](const ImageRGB& img) {
        int now = ++inside;
        worst = std::max(worst.load(), now);
        ProbMap p = colour_predictor(img, 2);
        --inside;
        return p;
      },
      false);
  TtaConfig cfg;
  cfg.horizontal_flip = true;
  cfg.window = WindowParams{4, 4, 2, 2};
  cfg.threads = 4;
  (void)tta_aggregate(ImageRGB(12, 12, 3), cfg, pred);
  CHECK(worst.load() == 1);
}

TEST_CASE("tta errors") {
  FunctionPredictor boom([](const ImageRGB&) -> ProbMap { throw std::runtime_error("model exploded"); });
  FunctionPredictor wrong([](const ImageRGB&) { return ProbMap(2, 1, 1, 0.5f); });
  FunctionPredictor ok([](const ImageRGB& img) { return ProbMap(1, img.width(), img.height(), 1.0f); });
  TtaConfig cfg;
  cfg.scales = {1.0};
  CHECK(code_of([&] { tta_aggregate(ImageRGB(4, 4), cfg, boom); }) == Errc::PredictorError);
  CHECK(code_of([&] { tta_aggregate(ImageRGB(4, 4), cfg, wrong); }) == Errc::DimMismatch);
  cfg.scales = {0.0};
  CHECK(code_of([&] { tta_aggregate(ImageRGB(4, 4), cfg, ok); }) == Errc::InvalidParams);
  cfg.scales = {};
  CHECK(code_of([&] { tta_aggregate(ImageRGB(4, 4), cfg, ok); }) == Errc::InvalidParams);
  cfg.scales = {1.0};
  CHECK(code_of([&] { tta_aggregate(ImageRGB(), cfg, ok); }) == Errc::EmptyInput);
}
