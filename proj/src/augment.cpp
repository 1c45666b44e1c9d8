// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/augment.hpp"

#include <algorithm>
#include <cmath>

#include "segfuse/rng.hpp"

namespace segfuse {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr long long kPad = -1;

// For every output pixel, the row-major source index it copies from, or kPad.
struct IndexMap {
  int width = 0;
  int height = 0;
  std::vector<long long> source;
};

int nearest_source(int d, int in, int out) {
  long long s = ((2LL * d + 1) * in) / (2LL * out);
  return static_cast<int>(std::min<long long>(s, in - 1));
}

std::pair<int, int> scaled_dims(int w, int h, double factor) {
  if (!(std::isfinite(factor) && factor > 0.0)) throw Error(Errc::InvalidSpec, "scale factor must be positive");
  int sw = static_cast<int>(std::lround(w * factor));
  int sh = static_cast<int>(std::lround(h * factor));
  if (sw < 1 || sh < 1) throw Error(Errc::InvalidSpec, "scale factor collapses the image");
  return {sw, sh};
}

IndexMap build_index_map(int w, int h, const GeometricSpec& spec) {
  IndexMap m;
  auto fill = [&](int ow, int oh, auto&& source_of) {
    m.width = ow;
    m.height = oh;
    m.source.resize(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh));
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) m.source[static_cast<std::size_t>(y) * ow + x] = source_of(x, y);
  };
  auto idx = [w](int x, int y) { return static_cast<long long>(y) * w + x; };
  auto resample = [&](int ow, int oh) {
    fill(ow, oh, [&](int x, int y) { return idx(nearest_source(x, w, ow), nearest_source(y, h, oh)); });
  };

  std::visit(Overloaded{
                 [&](const geom::Identity&) { fill(w, h, idx); },
                 [&](const geom::HFlip&) { fill(w, h, [&](int x, int y) { return idx(w - 1 - x, y); }); },
                 [&](const geom::VFlip&) { fill(w, h, [&](int x, int y) { return idx(x, h - 1 - y); }); },
                 [&](const geom::Rotate90& r) {
                   switch (r.k) {
                     // out(x', y') = in(x, y) with x' = h - 1 - y, y' = x
                     case 1: fill(h, w, [&](int xo, int yo) { return idx(yo, h - 1 - xo); }); break;
                     case 2: fill(w, h, [&](int xo, int yo) { return idx(w - 1 - xo, h - 1 - yo); }); break;
                     case 3: fill(h, w, [&](int xo, int yo) { return idx(w - 1 - yo, xo); }); break;
                     default: throw Error(Errc::InvalidSpec, "rotate90 k must be 1, 2 or 3");
                   }
                 },
                 [&](const geom::Scale& s) {
                   auto [sw, sh] = scaled_dims(w, h, s.factor);
                   resample(sw, sh);
                 },
                 [&](const geom::Resize& r) {
                   if (r.width < 1 || r.height < 1) throw Error(Errc::InvalidSpec, "resize dims must be >= 1");
                   resample(r.width, r.height);
                 },
                 [&](const geom::Crop& c) {
                   const Rect& r = c.rect;
                   if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > w || r.y + r.h > h)
                     throw Error(Errc::InvalidSpec, "crop rectangle lies outside the source");
                   fill(r.w, r.h, [&](int x, int y) { return idx(r.x + x, r.y + y); });
                 },
                 [&](const geom::PadTo& p) {
                   if (p.width < w || p.height < h) throw Error(Errc::InvalidSpec, "pad target smaller than source");
                   fill(p.width, p.height, [&](int x, int y) { return x < w && y < h ? idx(x, y) : kPad; });
                 },
             },
             spec);
  return m;
}

bool resamples(const GeometricSpec& spec) {
  return std::holds_alternative<geom::Scale>(spec) || std::holds_alternative<geom::Resize>(spec);
}

LabelMap remap_labels(const LabelMap& labels, const IndexMap& m) {
  LabelMap out(m.width, m.height, labels.ignore_index(), labels.ignore_index());
  auto src = labels.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < m.source.size(); ++i)
    if (m.source[i] != kPad) dst[i] = src[static_cast<std::size_t>(m.source[i])];
  return out;
}

ImageRGB remap_image(const ImageRGB& image, const IndexMap& m, const Rgb& fill) {
  ImageRGB out(m.width, m.height);
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < m.source.size(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      dst[3 * i + ch] = m.source[i] == kPad ? fill[static_cast<std::size_t>(ch)]
                                            : src[3 * static_cast<std::size_t>(m.source[i]) + ch];
    }
  }
  return out;
}

Rgb pad_fill(const GeometricSpec& spec) {
  if (const auto* p = std::get_if<geom::PadTo>(&spec)) return p->fill;
  return {0, 0, 0};
}

// HSV with H in degrees [0, 360), S in [0, 1], V in [0, 255].
void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  float mx = std::max({r, g, b});
  float mn = std::min({r, g, b});
  float d = mx - mn;
  v = mx;
  s = mx > 0.0f ? d / mx : 0.0f;
  if (d == 0.0f) {
    h = 0.0f;
  } else if (mx == r) {
    h = 60.0f * std::fmod((g - b) / d + 6.0f, 6.0f);
  } else if (mx == g) {
    h = 60.0f * ((b - r) / d + 2.0f);
  } else {
    h = 60.0f * ((r - g) / d + 4.0f);
  }
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  float c = v * s;
  float hp = h / 60.0f;
  float x = c * (1.0f - std::abs(std::fmod(hp, 2.0f) - 1.0f));
  float m = v - c;
  int sector = static_cast<int>(hp) % 6;
  float rr = 0, gg = 0, bb = 0;
  switch (sector) {
    case 0: rr = c; gg = x; break;
    case 1: rr = x; gg = c; break;
    case 2: gg = c; bb = x; break;
    case 3: gg = x; bb = c; break;
    case 4: rr = x; bb = c; break;
    default: rr = c; bb = x; break;
  }
  r = rr + m;
  g = gg + m;
  b = bb + m;
}

}  // namespace

AugmentedPair joint_geometric(const ImageRGB& image, const LabelMap& labels, const GeometricSpec& spec) {
  if (image.width() != labels.width() || image.height() != labels.height())
    throw Error(Errc::DimMismatch, "image and label dims differ");
  if (image.empty()) throw Error(Errc::EmptyInput, "geometric transform of an empty image");
  if (std::holds_alternative<geom::Identity>(spec)) return {image, labels};

  const IndexMap m = build_index_map(image.width(), image.height(), spec);
  AugmentedPair out;
  out.labels = remap_labels(labels, m);
  out.image = resamples(spec) ? resize_image(image, m.width, m.height) : remap_image(image, m, pad_fill(spec));
  return out;
}

ProbMap geometric_nearest(const ProbMap& prob, const GeometricSpec& spec) {
  if (prob.empty()) throw Error(Errc::EmptyInput, "geometric transform of an empty map");
  const IndexMap m = build_index_map(prob.width(), prob.height(), spec);
  ProbMap out(prob.num_classes(), m.width, m.height, 0.0f);
  for (int c = 0; c < prob.num_classes(); ++c) {
    auto src = prob.plane(c);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < m.source.size(); ++i)
      if (m.source[i] != kPad) dst[i] = src[static_cast<std::size_t>(m.source[i])];
  }
  return out;
}

AugmentedPair random_scale_crop_pad(const ImageRGB& image, const LabelMap& labels, const ScaleCropParams& p,
                                    std::uint64_t seed) {
  if (p.short_min < 1 || p.short_min > p.short_max)
    throw Error(Errc::InvalidRange, "short side range must satisfy 1 <= short_min <= short_max");
  if (p.long_cap < 1) throw Error(Errc::InvalidRange, "long side cap must be >= 1");
  if (p.crop_w < 1 || p.crop_h < 1) throw Error(Errc::InvalidRange, "crop dims must be >= 1");
  if (image.width() != labels.width() || image.height() != labels.height())
    throw Error(Errc::DimMismatch, "image and label dims differ");
  if (image.empty()) throw Error(Errc::EmptyInput, "augmentation of an empty image");

  Rng rng(seed);
  const int w = image.width();
  const int h = image.height();
  const double target = static_cast<double>(rng.uniform_int(p.short_min, p.short_max));
  double scale = target / std::min(w, h);
  if (std::max(w, h) * scale > p.long_cap) scale = static_cast<double>(p.long_cap) / std::max(w, h);
  const int sw = std::max(1, static_cast<int>(std::lround(w * scale)));
  const int sh = std::max(1, static_cast<int>(std::lround(h * scale)));

  AugmentedPair cur = joint_geometric(image, labels, geom::Resize{sw, sh});
  if (sw < p.crop_w || sh < p.crop_h)
    cur = joint_geometric(cur.image, cur.labels, geom::PadTo{std::max(sw, p.crop_w), std::max(sh, p.crop_h), p.image_fill});

  const int cw = cur.image.width();
  const int ch = cur.image.height();
  const int x0 = static_cast<int>(rng.uniform_int(0, cw - p.crop_w));
  const int y0 = static_cast<int>(rng.uniform_int(0, ch - p.crop_h));
  if (x0 == 0 && y0 == 0 && cw == p.crop_w && ch == p.crop_h) return cur;
  return joint_geometric(cur.image, cur.labels, geom::Crop{{x0, y0, p.crop_w, p.crop_h}});
}

AugmentedPair random_hflip(const ImageRGB& image, const LabelMap& labels, double probability, std::uint64_t seed) {
  if (!(probability >= 0.0 && probability <= 1.0)) throw Error(Errc::InvalidRange, "flip probability must lie in [0, 1]");
  Rng rng(seed);
  if (rng.bernoulli(probability)) return joint_geometric(image, labels, geom::HFlip{});
  return joint_geometric(image, labels, geom::Identity{});
}

PhotometricPlan sample_photometric(std::uint64_t seed, const PhotometricConfig& c) {
  if (!(c.probability >= 0.0 && c.probability <= 1.0) || c.brightness_delta < 0.0 || c.contrast_min > c.contrast_max ||
      c.saturation_min > c.saturation_max || c.hue_delta_deg < 0.0 || c.contrast_min < 0.0 || c.saturation_min < 0.0)
    throw Error(Errc::InvalidParams, "invalid photometric distortion ranges");
  Rng rng(seed);
  PhotometricPlan plan;
  // Every step draws both its coin and its parameter, so the stream layout is fixed.
  auto step = [&](double lo, double hi, std::optional<double>& slot) {
    bool apply = rng.bernoulli(c.probability);
    double value = rng.uniform(lo, hi);
    if (apply) slot = value;
  };
  step(-c.brightness_delta, c.brightness_delta, plan.brightness);
  step(c.contrast_min, c.contrast_max, plan.contrast);
  step(c.saturation_min, c.saturation_max, plan.saturation);
  step(-c.hue_delta_deg, c.hue_delta_deg, plan.hue_deg);
  return plan;
}

ImageRGB apply_photometric(const ImageRGB& image, const PhotometricPlan& plan) {
  if (plan.is_identity()) return image;
  ImageRGB out(image.width(), image.height());
  auto src = image.data();
  auto dst = out.data();
  const std::size_t n = src.size() / 3;
  auto clamp8 = [](float v) { return std::clamp(v, 0.0f, 255.0f); };
  for (std::size_t i = 0; i < n; ++i) {
    float rgb[3] = {static_cast<float>(src[3 * i]), static_cast<float>(src[3 * i + 1]),
                    static_cast<float>(src[3 * i + 2])};
    if (plan.brightness)
      for (float& v : rgb) v = clamp8(v + static_cast<float>(*plan.brightness));
    if (plan.contrast)
      for (float& v : rgb) v = clamp8(v * static_cast<float>(*plan.contrast));
    if (plan.saturation || plan.hue_deg) {
      float hh, ss, vv;
      rgb_to_hsv(rgb[0], rgb[1], rgb[2], hh, ss, vv);
      if (plan.saturation) ss = std::clamp(ss * static_cast<float>(*plan.saturation), 0.0f, 1.0f);
      if (plan.hue_deg) {
        hh = std::fmod(hh + static_cast<float>(*plan.hue_deg) + 360.0f, 360.0f);
        if (hh >= 360.0f) hh -= 360.0f;
      }
      hsv_to_rgb(hh, ss, vv, rgb[0], rgb[1], rgb[2]);
      for (float& v : rgb) v = clamp8(v);
    }
    for (int ch = 0; ch < 3; ++ch) dst[3 * i + ch] = static_cast<std::uint8_t>(std::lround(rgb[ch]));
  }
  return out;
}

ImageRGB photometric_distort(const ImageRGB& image, std::uint64_t seed, const PhotometricConfig& config) {
  return apply_photometric(image, sample_photometric(seed, config));
}

}  // namespace segfuse
