// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Procedural adverse-weather overlays. Each kind yields a per-pixel alpha and an
// overlay colour; the image is composited as out = img + a * (overlay - img),
// rounded to nearest, which is (1 - a) * img + a * overlay.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "segfuse/core.hpp"

namespace segfuse {

enum class WeatherKind { Rain, Snow, Fog, Lightning };

const char* weather_kind_name(WeatherKind kind) noexcept;
/// Accepts "rain", "snow", "fog", "lightning". Throws InvalidParams otherwise.
WeatherKind parse_weather_kind(const std::string& name);

using Rgb = std::array<std::uint8_t, 3>;

struct RainKnobs {
  double angle_deg = 10.0;  // from vertical
  double angle_jitter_deg = 4.0;
  double length = 18.0;     // maximum streak length, pixels
  double thickness = 1.5;   // pixels
  double density = 600.0;   // streaks per megapixel
  double opacity = 0.7;
  Rgb color{210, 210, 220};
};

struct SnowKnobs {
  double radius_min = 1.0;
  double radius_max = 3.5;
  double density = 900.0;  // flakes per megapixel
  double opacity = 0.9;
  Rgb color{245, 245, 250};
};

struct FogKnobs {
  Rgb color{220, 220, 225};
};

struct LightningKnobs {
  // Flash centre in normalized image coordinates; drawn from the seed when unset.
  std::optional<double> center_x;
  std::optional<double> center_y;
  double gain = 1.5;
  double falloff = 0.35;  // gaussian sigma as a fraction of the image diagonal
  Rgb color{255, 255, 240};
};

struct WeatherMarkParams {
  WeatherKind kind = WeatherKind::Rain;
  double intensity = 0.5;  // [0, 1]
  std::uint64_t seed = 0;
  RainKnobs rain;
  SnowKnobs snow;
  FogKnobs fog;
  LightningKnobs lightning;
};

/// Throws InvalidParams on out-of-range knobs.
void validate(const WeatherMarkParams& params);

struct Streak {
  double x0, y0, x1, y1;
};

struct Flake {
  double cx, cy, radius;
};

/// The seeded streak set a rain mark rasterizes for a w x h image.
std::vector<Streak> rain_streaks(const WeatherMarkParams& params, int w, int h);
std::vector<Flake> snow_flakes(const WeatherMarkParams& params, int w, int h);

/// Per-pixel overlay alpha in [0, 1], row-major.
std::vector<float> weather_alpha(const WeatherMarkParams& params, int w, int h);
Rgb weather_overlay_color(const WeatherMarkParams& params) noexcept;

/// Composites with a per-pixel alpha; alpha must have width * height entries.
ImageRGB composite(const ImageRGB& image, const std::vector<float>& alpha, const Rgb& overlay);

ImageRGB apply_weather_mark(const ImageRGB& image, const WeatherMarkParams& params);

}  // namespace segfuse
