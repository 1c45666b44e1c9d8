// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/recipe.hpp"

#include "segfuse/io.hpp"
#include "segfuse/parallel.hpp"
#include "segfuse/rng.hpp"

namespace segfuse {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(Errc::SchemaError, "recipe field '" + path_ + "." + key + "': " + what);
  }

  bool has(const char* key) const { return obj_.contains(key); }

  double number(const char* key, double fallback) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) return fallback;
    if (!it->is_number()) fail(key, "expected a number");
    return it->get<double>();
  }

  int integer(const char* key, int fallback) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) return fallback;
    if (!it->is_number_integer()) fail(key, "expected an integer");
    return it->get<int>();
  }

  int required_int(const char* key) const {
    if (!has(key)) fail(key, "missing");
    return integer(key, 0);
  }

  std::optional<std::uint64_t> seed() const {
    auto it = obj_.find("seed");
    if (it == obj_.end()) return std::nullopt;
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
      fail("seed", "expected a non-negative integer");
    return it->get<std::uint64_t>();
  }

  std::string string(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) fail(key, "missing");
    if (!it->is_string()) fail(key, "expected a string");
    return it->get<std::string>();
  }

  Rgb color(const char* key, Rgb fallback) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) return fallback;
    if (!it->is_array() || it->size() != 3) fail(key, "expected [r, g, b]");
    Rgb out{};
    for (std::size_t i = 0; i < 3; ++i) {
      const json& v = (*it)[i];
      if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 255) fail(key, "channels must be 0..255");
      out[i] = static_cast<std::uint8_t>(v.get<int>());
    }
    return out;
  }

 private:
  const json& obj_;
  std::string path_;
};

RecipeOp parse_op(const json& obj, const std::string& path) {
  if (!obj.is_object()) throw Error(Errc::SchemaError, "recipe field '" + path + "': expected an object");
  Fields f(obj, path);
  const std::string op = f.string("op");

  if (op == "weather") {
    WeatherOp w;
    WeatherMarkParams& p = w.params;
    try {
      p.kind = parse_weather_kind(f.string("kind"));
    } catch (const Error& e) {
      f.fail("kind", e.what());
    }
    p.intensity = f.number("intensity", p.intensity);
    RainKnobs& r = p.rain;
    SnowKnobs& s = p.snow;
    LightningKnobs& l = p.lightning;
    switch (p.kind) {
      case WeatherKind::Rain:
        r.angle_deg = f.number("angle_deg", r.angle_deg);
        r.angle_jitter_deg = f.number("angle_jitter_deg", r.angle_jitter_deg);
        r.length = f.number("length", r.length);
        r.thickness = f.number("thickness", r.thickness);
        r.density = f.number("density", r.density);
        r.opacity = f.number("opacity", r.opacity);
        r.color = f.color("color", r.color);
        break;
      case WeatherKind::Snow:
        s.radius_min = f.number("radius_min", s.radius_min);
        s.radius_max = f.number("radius_max", s.radius_max);
        s.density = f.number("density", s.density);
        s.opacity = f.number("opacity", s.opacity);
        s.color = f.color("color", s.color);
        break;
      case WeatherKind::Fog:
        p.fog.color = f.color("color", p.fog.color);
        break;
      case WeatherKind::Lightning:
        if (f.has("center_x")) l.center_x = f.number("center_x", 0.5);
        if (f.has("center_y")) l.center_y = f.number("center_y", 0.5);
        l.gain = f.number("gain", l.gain);
        l.falloff = f.number("falloff", l.falloff);
        l.color = f.color("color", l.color);
        break;
    }
    try {
      validate(p);
    } catch (const Error& e) {
      throw Error(Errc::SchemaError, "recipe op '" + path + "': " + e.what());
    }
    w.seed = f.seed();
    return w;
  }
  if (op == "identity") return GeometricOp{geom::Identity{}};
  if (op == "hflip") return GeometricOp{geom::HFlip{}};
  if (op == "vflip") return GeometricOp{geom::VFlip{}};
  if (op == "rotate90") {
    int k = f.integer("k", 1);
    if (k < 1 || k > 3) f.fail("k", "must be 1, 2 or 3");
    return GeometricOp{geom::Rotate90{k}};
  }
  if (op == "scale") {
    double factor = f.number("factor", 1.0);
    if (!(factor > 0.0)) f.fail("factor", "must be > 0");
    return GeometricOp{geom::Scale{factor}};
  }
  if (op == "resize") return GeometricOp{geom::Resize{f.required_int("width"), f.required_int("height")}};
  if (op == "crop")
    return GeometricOp{geom::Crop{{f.required_int("x"), f.required_int("y"), f.required_int("w"), f.required_int("h")}}};
  if (op == "pad")
    return GeometricOp{geom::PadTo{f.required_int("width"), f.required_int("height"), f.color("fill", {0, 0, 0})}};
  if (op == "random_hflip") {
    RandomFlipOp r;
    r.probability = f.number("prob", r.probability);
    if (!(r.probability >= 0.0 && r.probability <= 1.0)) f.fail("prob", "must lie in [0, 1]");
    r.seed = f.seed();
    return r;
  }
  if (op == "random_scale_crop_pad") {
    ScaleCropOp s;
    ScaleCropParams& p = s.params;
    p.short_min = f.integer("short_min", p.short_min);
    p.short_max = f.integer("short_max", p.short_max);
    p.long_cap = f.integer("long_cap", p.long_cap);
    p.crop_w = f.integer("crop_w", p.crop_w);
    p.crop_h = f.integer("crop_h", p.crop_h);
    p.image_fill = f.color("fill", p.image_fill);
    if (p.short_min < 1 || p.short_min > p.short_max) f.fail("short_min", "need 1 <= short_min <= short_max");
    s.seed = f.seed();
    return s;
  }
  if (op == "photometric") {
    PhotometricOp ph;
    PhotometricConfig& c = ph.config;
    c.probability = f.number("prob", c.probability);
    c.brightness_delta = f.number("brightness_delta", c.brightness_delta);
    c.contrast_min = f.number("contrast_min", c.contrast_min);
    c.contrast_max = f.number("contrast_max", c.contrast_max);
    c.saturation_min = f.number("saturation_min", c.saturation_min);
    c.saturation_max = f.number("saturation_max", c.saturation_max);
    c.hue_delta_deg = f.number("hue_delta_deg", c.hue_delta_deg);
    ph.seed = f.seed();
    return ph;
  }
  f.fail("op", "unknown op '" + op + "'");
}

std::uint64_t op_seed(const std::optional<std::uint64_t>& own, const Recipe& r, std::string_view scene, std::size_t i) {
  return derive_seed(own.value_or(r.seed), scene, i);
}

}  // namespace

Recipe parse_recipe_json(const json& doc) {
  if (!doc.is_object()) throw Error(Errc::SchemaError, "recipe must be a JSON object");
  auto format = doc.find("format");
  if (format == doc.end() || !format->is_number_integer() || format->get<int>() != 1)
    throw Error(Errc::SchemaError, "recipe field 'format': expected 1");
  Recipe r;
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
      throw Error(Errc::SchemaError, "recipe field 'seed': expected a non-negative integer");
    r.seed = it->get<std::uint64_t>();
  }
  if (auto it = doc.find("suffix"); it != doc.end()) {
    if (!it->is_string()) throw Error(Errc::SchemaError, "recipe field 'suffix': expected a string");
    r.suffix = it->get<std::string>();
  }
  auto ops = doc.find("ops");
  if (ops == doc.end() || !ops->is_array()) throw Error(Errc::SchemaError, "recipe field 'ops': expected an array");
  for (std::size_t i = 0; i < ops->size(); ++i) r.ops.push_back(parse_op((*ops)[i], "ops[" + std::to_string(i) + "]"));
  return r;
}

Recipe parse_recipe(const std::filesystem::path& path) { return parse_recipe_json(read_json(path)); }

AugmentedPair apply_recipe(const ImageRGB& image, const LabelMap& labels, const Recipe& recipe,
                           std::string_view scene_id) {
  AugmentedPair cur{image, labels};
  for (std::size_t i = 0; i < recipe.ops.size(); ++i) {
    std::visit(Overloaded{
                   [&](const WeatherOp& op) {
                     WeatherMarkParams p = op.params;
                     p.seed = op_seed(op.seed, recipe, scene_id, i);
                     cur.image = apply_weather_mark(cur.image, p);
                   },
                   [&](const GeometricOp& op) { cur = joint_geometric(cur.image, cur.labels, op.spec); },
                   [&](const RandomFlipOp& op) {
                     cur = random_hflip(cur.image, cur.labels, op.probability, op_seed(op.seed, recipe, scene_id, i));
                   },
                   [&](const ScaleCropOp& op) {
                     cur = random_scale_crop_pad(cur.image, cur.labels, op.params,
                                                 op_seed(op.seed, recipe, scene_id, i));
                   },
                   [&](const PhotometricOp& op) {
                     cur.image = photometric_distort(cur.image, op_seed(op.seed, recipe, scene_id, i), op.config);
                   },
               },
               recipe.ops[i]);
  }
  return cur;
}

SceneManifest augment_dataset(const SceneManifest& manifest, const Recipe& recipe, const std::filesystem::path& out_dir,
                              unsigned threads) {
  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "gt");

  std::optional<std::string> weather_tag;
  for (const RecipeOp& op : recipe.ops)
    if (const auto* w = std::get_if<WeatherOp>(&op)) weather_tag = weather_kind_name(w->params.kind);

  SceneManifest out;
  out.classes = manifest.classes;
  out.ignore_index = manifest.ignore_index;
  out.scenes.resize(manifest.scenes.size());

  parallel_for(manifest.scenes.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Scene& scene = manifest.scenes[i];
      ImageRGB image = io::read_image_png(scene.image);
      LabelMap labels = io::read_label_png(scene.gt, manifest.ignore_index);
      if (image.width() != labels.width() || image.height() != labels.height())
        throw Error(Errc::DimMismatch, "scene '" + scene.id + "': image and ground truth dims differ");
      AugmentedPair result = apply_recipe(image, labels, recipe, scene.id);

      Scene& dst = out.scenes[i];
      dst.id = scene.id + recipe.suffix;
      dst.image = out_dir / "images" / (dst.id + ".png");
      dst.gt = out_dir / "gt" / (dst.id + ".png");
      dst.weather = weather_tag ? weather_tag : scene.weather;
      io::write_image_png(result.image, dst.image);
      io::write_label_png(result.labels, dst.gt);
    }
  });
  write_manifest(out, out_dir / "manifest.json");
  return out;
}

}  // namespace segfuse
