// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "segfuse/augment.hpp"
#include "segfuse/error.hpp"
#include "segfuse/io.hpp"
#include "segfuse/manifest.hpp"
#include "segfuse/recipe.hpp"
#include "segfuse/weather.hpp"
#include "support.hpp"

using namespace segfuse;
using segfuse::test::Gen;
using nlohmann::json;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Usage;
}

double point_segment_distance(double px, double py, const Streak& s) {
  // Closest point by clamped projection onto the segment.
  const double vx = s.x1 - s.x0;
  const double vy = s.y1 - s.y0;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - s.x0) * vx + (py - s.y0) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (s.x0 + t * vx), py - (s.y0 + t * vy));
}

std::vector<GeometricSpec> all_specs(int w, int h, Gen& g) {
  std::vector<GeometricSpec> specs = {geom::Identity{}, geom::HFlip{}, geom::VFlip{}, geom::Rotate90{1},
                                      geom::Rotate90{2}, geom::Rotate90{3}};
  specs.push_back(geom::Scale{0.25 + g.unit() * 2.0});
  specs.push_back(geom::Resize{g.range(1, 2 * w), g.range(1, 2 * h)});
  int cx = g.range(0, w - 1);
  int cy = g.range(0, h - 1);
  specs.push_back(geom::Crop{{cx, cy, g.range(1, w - cx), g.range(1, h - cy)}});
  specs.push_back(geom::PadTo{w + g.range(0, 5), h + g.range(0, 5), {9, 8, 7}});
  return specs;
}

}  // namespace

TEST_CASE("intensity zero leaves the image untouched for every kind") {
  Gen g(71);
  ImageRGB img = test::random_image(g, 40, 30);
  for (WeatherKind k : {WeatherKind::Rain, WeatherKind::Snow, WeatherKind::Fog, WeatherKind::Lightning}) {
    WeatherMarkParams p;
    p.kind = k;
    p.intensity = 0.0;
    p.seed = 99;
    CHECK(apply_weather_mark(img, p) == img);
  }
}

TEST_CASE("full white fog whitens every pixel") {
  Gen g(72);
  WeatherMarkParams p;
  p.kind = WeatherKind::Fog;
  p.intensity = 1.0;
  p.fog.color = {255, 255, 255};
  ImageRGB out = apply_weather_mark(test::random_image(g, 17, 9), p);
  for (auto b : out.data()) REQUIRE(b == 255);
}

TEST_CASE("rain matches an independent full-scan rasterization of the same streaks") {
  Gen g(73);
  for (int trial = 0; trial < 6; ++trial) {
    WeatherMarkParams p;
    p.kind = WeatherKind::Rain;
    p.intensity = 0.3 + 0.7 * g.unit();
    p.seed = g.bits();
    p.rain.density = 3000;
    p.rain.thickness = 1.0 + 2.0 * g.unit();
    const int w = g.range(30, 90);
    const int h = g.range(30, 90);
    ImageRGB img(w, h, 20);
    ImageRGB out = apply_weather_mark(img, p);
    CHECK(apply_weather_mark(img, p) == out);
    const auto streaks = rain_streaks(p, w, h);
    REQUIRE(!streaks.empty());
    const double half = p.rain.thickness / 2;
    int covered = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double best = 1e300;
        for (const Streak& s : streaks) best = std::min(best, point_segment_distance(x + 0.5, y + 0.5, s));
        if (std::abs(best - half) < 1e-9) continue;
        const bool expect = best < half;
        const bool changed = out.at(x, y, 0) != 20 || out.at(x, y, 2) != 20;
        covered += expect;
        REQUIRE(expect == changed);
        if (expect) {
          const double a = p.intensity * p.rain.opacity;
          REQUIRE(out.at(x, y, 2) == static_cast<int>(std::lround(20 + a * (220 - 20))));
        }
      }
    CHECK(covered > 0);
  }
}

TEST_CASE("snow alpha is a soft disc around each seeded flake") {
  WeatherMarkParams p;
  p.kind = WeatherKind::Snow;
  p.intensity = 1.0;
  p.seed = 5;
  p.snow.density = 4000;
  const int w = 50;
  const int h = 40;
  auto alpha = weather_alpha(p, w, h);
  auto flakes = snow_flakes(p, w, h);
  CHECK(flakes.size() == static_cast<std::size_t>(std::lround(4000.0 * w * h / 1e6)));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double best = 0.0;
      for (const Flake& f : flakes) {
        double d = std::hypot(x + 0.5 - f.cx, y + 0.5 - f.cy);
        if (d < f.radius) best = std::max(best, p.snow.opacity * (1.0 - d / f.radius));
      }
      REQUIRE(alpha[static_cast<std::size_t>(y) * w + x] == doctest::Approx(best).epsilon(1e-6));
    }
}

TEST_CASE("lightning peaks at its centre and stays within [0, 1]") {
  WeatherMarkParams p;
  p.kind = WeatherKind::Lightning;
  p.intensity = 0.8;
  p.lightning.center_x = 0.25;
  p.lightning.center_y = 0.5;
  auto alpha = weather_alpha(p, 40, 20);
  float peak = *std::max_element(alpha.begin(), alpha.end());
  CHECK(peak == doctest::Approx(0.8));
  CHECK(alpha[10 * 40 + 9] >= alpha[10 * 40 + 39]);
  for (float a : alpha) REQUIRE((a >= 0.0f && a <= 1.0f));
}

TEST_CASE("fog moves every pixel monotonically toward the fog colour") {
  Gen g(74);
  ImageRGB img = test::random_image(g, 25, 25);
  WeatherMarkParams p;
  p.kind = WeatherKind::Fog;
  p.fog.color = {200, 40, 90};
  std::vector<int> prev(img.data().size(), 1 << 30);
  for (int step = 0; step <= 20; ++step) {
    p.intensity = step / 20.0;
    ImageRGB out = apply_weather_mark(img, p);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      int d = std::abs(static_cast<int>(out.data()[i]) - p.fog.color[i % 3]);
      REQUIRE(d <= prev[i]);
      prev[i] = d;
    }
  }
}

TEST_CASE("weather parameter validation") {
  WeatherMarkParams p;
  p.intensity = 1.5;
  CHECK(code_of([&] { validate(p); }) == Errc::InvalidParams);
  p.intensity = 0.5;
  p.rain.density = -1;
  CHECK(code_of([&] { validate(p); }) == Errc::InvalidParams);
  CHECK(code_of([] { parse_weather_kind("hail"); }) == Errc::InvalidParams);
  CHECK(parse_weather_kind("lightning") == WeatherKind::Lightning);
  CHECK(code_of([] { composite(ImageRGB(2, 2), std::vector<float>(3), {0, 0, 0}); }) == Errc::DimMismatch);
}

TEST_CASE("rotate90 k=1 on a 2x3 map follows the coordinate oracle") {
  LabelMap l(2, 3, std::vector<Label>{0, 1, 2, 3, 4, 5});
  ImageRGB img(2, 3);
  auto r = joint_geometric(img, l, geom::Rotate90{1});
  REQUIRE(r.labels.width() == 3);
  REQUIRE(r.labels.height() == 2);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 2; ++x) CHECK(r.labels.at(3 - 1 - y, x) == l.at(x, y));
}

TEST_CASE("rotations compose and flips are involutions") {
  Gen g(75);
  ImageRGB img = test::random_image(g, 7, 4);
  LabelMap l = test::random_labels(g, 7, 4, 5, 0.1);
  auto once = joint_geometric(img, l, geom::Rotate90{1});
  auto twice = joint_geometric(once.image, once.labels, geom::Rotate90{1});
  auto direct = joint_geometric(img, l, geom::Rotate90{2});
  CHECK(twice.image == direct.image);
  CHECK(twice.labels == direct.labels);
  auto back = joint_geometric(once.image, once.labels, geom::Rotate90{3});
  CHECK(back.image == img);
  CHECK(back.labels == l);
  for (GeometricSpec s : {GeometricSpec{geom::HFlip{}}, GeometricSpec{geom::VFlip{}}}) {
    auto a = joint_geometric(img, l, s);
    auto b = joint_geometric(a.image, a.labels, s);
    CHECK(b.image == img);
    CHECK(b.labels == l);
  }
  auto id = joint_geometric(img, l, geom::Identity{});
  CHECK(id.image == img);
  CHECK(id.labels == l);
}

TEST_CASE("geometric ops keep labels aligned with a one-hot map and add no new values") {
  Gen g(76);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = g.range(2, 20);
    const int h = g.range(2, 20);
    ImageRGB img = test::random_image(g, w, h);
    LabelMap l = test::random_labels(g, w, h, 4);
    ProbMap oh = one_hot(l, 4);
    std::set<Label> allowed(l.data().begin(), l.data().end());
    allowed.insert(l.ignore_index());
    for (const GeometricSpec& spec : all_specs(w, h, g)) {
      auto pair = joint_geometric(img, l, spec);
      REQUIRE(pair.image.width() == pair.labels.width());
      REQUIRE(pair.image.height() == pair.labels.height());
      ProbMap moved = geometric_nearest(oh, spec);
      LabelMap via = argmax_labels(moved);
      for (std::size_t i = 0; i < pair.labels.size(); ++i) {
        const Label v = pair.labels.data()[i];
        REQUIRE(allowed.count(v) == 1);
        if (v == l.ignore_index()) {
          for (int c = 0; c < 4; ++c) REQUIRE(moved.data()[static_cast<std::size_t>(c) * moved.pixels() + i] == 0.0f);
        } else {
          REQUIRE(via.data()[i] == v);
        }
      }
    }
  }
}

TEST_CASE("padding fills labels with the ignore index and the image with the fill colour") {
  ImageRGB img(2, 2, 50);
  LabelMap l(2, 2, 1, 300);
  auto r = joint_geometric(img, l, geom::PadTo{3, 4, {1, 2, 3}});
  CHECK(r.labels.at(2, 0) == 300);
  CHECK(r.labels.at(0, 3) == 300);
  CHECK(r.labels.at(1, 1) == 1);
  CHECK(r.image.at(2, 3, 1) == 2);
  CHECK(r.image.at(0, 0, 0) == 50);
}

TEST_CASE("geometric errors") {
  ImageRGB img(4, 4);
  LabelMap l(4, 4);
  CHECK(code_of([&] { joint_geometric(img, LabelMap(3, 4), geom::Identity{}); }) == Errc::DimMismatch);
  CHECK(code_of([&] { joint_geometric(img, l, geom::Rotate90{4}); }) == Errc::InvalidSpec);
  CHECK(code_of([&] { joint_geometric(img, l, geom::Crop{{2, 2, 3, 1}}); }) == Errc::InvalidSpec);
  CHECK(code_of([&] { joint_geometric(img, l, geom::PadTo{3, 5}); }) == Errc::InvalidSpec);
  CHECK(code_of([&] { joint_geometric(img, l, geom::Scale{0.0}); }) == Errc::InvalidSpec);
  CHECK(code_of([&] { joint_geometric(img, l, geom::Resize{0, 2}); }) == Errc::InvalidSpec);
}

TEST_CASE("scale-crop-pad defaults follow the training configuration") {
  ScaleCropParams p;
  CHECK(p.short_min == 448);
  CHECK(p.short_max == 1882);
  CHECK(p.long_cap == 3584);
  CHECK(p.crop_w == 896);
  CHECK(p.crop_h == 896);
}

TEST_CASE("scale-crop-pad: degenerate range is identity, seeds are deterministic, output has crop dims") {
  Gen g(77);
  ImageRGB img = test::random_image(g, 30, 20);
  LabelMap l = test::random_labels(g, 30, 20, 3);
  ScaleCropParams id{20, 20, 100, 30, 20};
  auto same = random_scale_crop_pad(img, l, id, 1234);
  CHECK(same.image == img);
  CHECK(same.labels == l);

  ScaleCropParams p{10, 40, 50, 24, 24};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = random_scale_crop_pad(img, l, p, seed);
    auto b = random_scale_crop_pad(img, l, p, seed);
    REQUIRE(a.image == b.image);
    REQUIRE(a.labels == b.labels);
    REQUIRE(a.image.width() == 24);
    REQUIRE(a.labels.height() == 24);
  }
  CHECK(code_of([&] { random_scale_crop_pad(img, l, {40, 10, 50, 24, 24}, 0); }) == Errc::InvalidRange);
  CHECK(code_of([&] { random_scale_crop_pad(img, l, {10, 40, 50, 0, 24}, 0); }) == Errc::InvalidRange);
}

TEST_CASE("small images are padded with the ignore index before cropping") {
  ImageRGB img(4, 4, 100);
  LabelMap l(4, 4, 2);
  auto r = random_scale_crop_pad(img, l, {4, 4, 100, 8, 8}, 3);
  CHECK(r.labels.width() == 8);
  CHECK(r.labels.at(7, 7) == 255);
  CHECK(r.labels.at(0, 0) == 2);
}

TEST_CASE("random hflip honours its probability bounds") {
  Gen g(78);
  ImageRGB img = test::random_image(g, 5, 3);
  LabelMap l = test::random_labels(g, 5, 3, 3);
  CHECK(random_hflip(img, l, 0.0, 1).labels == l);
  CHECK(random_hflip(img, l, 1.0, 1).labels == flip_horizontal(l));
  CHECK(code_of([&] { random_hflip(img, l, 1.5, 1); }) == Errc::InvalidRange);
}

TEST_CASE("photometric: all-skip and brightness-only plans") {
  Gen g(79);
  ImageRGB img = test::random_image(g, 9, 9);
  std::optional<std::uint64_t> skip_seed;
  std::optional<std::uint64_t> bright_seed;
  for (std::uint64_t s = 0; s < 5000 && !(skip_seed && bright_seed); ++s) {
    PhotometricPlan plan = sample_photometric(s);
    if (plan.is_identity() && !skip_seed) skip_seed = s;
    if (plan.brightness && !plan.contrast && !plan.saturation && !plan.hue_deg && !bright_seed) bright_seed = s;
  }
  REQUIRE(skip_seed);
  REQUIRE(bright_seed);
  CHECK(photometric_distort(img, *skip_seed) == img);

  const double d = *sample_photometric(*bright_seed).brightness;
  CHECK(std::abs(d) <= 32.0);
  for (int gray : {0, 10, 128, 240, 255}) {
    ImageRGB flat(6, 4, static_cast<std::uint8_t>(gray));
    ImageRGB out = photometric_distort(flat, *bright_seed);
    const long expect = std::lround(std::clamp(gray + d, 0.0, 255.0));
    for (auto b : out.data()) REQUIRE(b == expect);
  }
  CHECK(photometric_distort(img, 42) == photometric_distort(img, 42));
}

TEST_CASE("photometric plans stay inside the configured ranges") {
  PhotometricConfig c;
  c.probability = 1.0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    PhotometricPlan plan = sample_photometric(s, c);
    REQUIRE(plan.brightness);
    REQUIRE(std::abs(*plan.brightness) <= 32.0);
    REQUIRE((*plan.contrast >= 0.5 && *plan.contrast <= 1.5));
    REQUIRE((*plan.saturation >= 0.5 && *plan.saturation <= 1.5));
    REQUIRE(std::abs(*plan.hue_deg) <= 18.0);
  }
  c.contrast_min = 2.0;
  CHECK(code_of([&] { sample_photometric(0, c); }) == Errc::InvalidParams);
}

TEST_CASE("saturation 0 greys out a colour") {
  PhotometricPlan plan;
  plan.saturation = 0.0;
  ImageRGB img(1, 1);
  img.at(0, 0, 0) = 200;
  img.at(0, 0, 1) = 50;
  img.at(0, 0, 2) = 10;
  ImageRGB out = apply_photometric(img, plan);
  CHECK(out.at(0, 0, 0) == 200);
  CHECK(out.at(0, 0, 1) == 200);
  CHECK(out.at(0, 0, 2) == 200);
}

TEST_CASE("recipe parsing and application") {
  json doc = json::parse(R"({
    "format": 1, "seed": 7, "suffix": "_rain",
    "ops": [
      {"op": "weather", "kind": "rain", "intensity": 0.6, "density": 2000},
      {"op": "random_hflip", "prob": 0.5},
      {"op": "rotate90", "k": 2},
      {"op": "photometric", "seed": 11}
    ]})");
  Recipe r = parse_recipe_json(doc);
  CHECK(r.seed == 7);
  CHECK(r.suffix == "_rain");
  REQUIRE(r.ops.size() == 4);
  CHECK(std::get<WeatherOp>(r.ops[0]).params.rain.density == 2000);
  CHECK(*std::get<PhotometricOp>(r.ops[3]).seed == 11);

  Gen g(80);
  ImageRGB img = test::random_image(g, 20, 12);
  LabelMap l = test::random_labels(g, 20, 12, 3);
  auto a = apply_recipe(img, l, r, "scene_a");
  auto b = apply_recipe(img, l, r, "scene_a");
  CHECK(a.image == b.image);
  CHECK(a.labels == b.labels);
  CHECK(apply_recipe(img, l, r, "scene_b").image != a.image);

  auto bad = [](const char* text) { return code_of([&] { parse_recipe_json(json::parse(text)); }); };
  CHECK(bad(R"({"format":1,"ops":[{"op":"spin"}]})") == Errc::SchemaError);
  CHECK(bad(R"({"format":1,"ops":[{"op":"rotate90","k":5}]})") == Errc::SchemaError);
  CHECK(bad(R"({"format":1,"ops":[{"op":"weather","kind":"hail"}]})") == Errc::SchemaError);
  CHECK(bad(R"({"format":1,"ops":[{"op":"crop","x":0}]})") == Errc::SchemaError);
  CHECK(bad(R"({"format":2,"ops":[]})") == Errc::SchemaError);
  CHECK(bad(R"({"format":1,"seed":-3,"ops":[]})") == Errc::SchemaError);
}

TEST_CASE("augment_dataset writes a manifest and is independent of thread count") {
  Gen g(81);
  test::TempDir dir("aug");
  SceneManifest m;
  m.classes = {"a", "b", "c"};
  for (int i = 0; i < 5; ++i) {
    Scene s;
    s.id = "s" + std::to_string(i);
    s.image = dir / (s.id + "_img.png");
    s.gt = dir / (s.id + "_gt.png");
    s.weather = "clear";
    io::write_image_png(test::random_image(g, 16, 10), s.image);
    io::write_label_png(test::random_labels(g, 16, 10, 3), s.gt);
    m.scenes.push_back(s);
  }
  Recipe r = parse_recipe_json(json::parse(
      R"({"format":1,"seed":3,"suffix":"_snow","ops":[{"op":"weather","kind":"snow","intensity":1.0},{"op":"scale","factor":1.5}]})"));
  SceneManifest one = augment_dataset(m, r, dir / "out1", 1);
  SceneManifest many = augment_dataset(m, r, dir / "out4", 4);
  REQUIRE(one.scenes.size() == 5);
  CHECK(one.scenes[0].id == "s0_snow");
  CHECK(*one.scenes[0].weather == "snow");
  SceneManifest reread = parse_manifest(dir / "out1" / "manifest.json");
  CHECK(reread.scenes[4].id == "s4_snow");
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(test::slurp(one.scenes[i].image) == test::slurp(many.scenes[i].image));
    CHECK(test::slurp(one.scenes[i].gt) == test::slurp(many.scenes[i].gt));
    CHECK(io::read_label_png(one.scenes[i].gt).width() == 24);
  }
}
