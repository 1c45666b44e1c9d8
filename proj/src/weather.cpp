// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/weather.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "segfuse/rng.hpp"

namespace segfuse {
namespace {

std::size_t mark_count(double density, int w, int h) {
  return static_cast<std::size_t>(std::llround(density * static_cast<double>(w) * h / 1e6));
}

double segment_distance_sq(double px, double py, const Streak& s) {
  double dx = s.x1 - s.x0;
  double dy = s.y1 - s.y0;
  double len_sq = dx * dx + dy * dy;
  double t = len_sq > 0.0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double ex = s.x0 + t * dx - px;
  double ey = s.y0 + t * dy - py;
  return ex * ex + ey * ey;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::InvalidParams, what);
}

}  // namespace

const char* weather_kind_name(WeatherKind kind) noexcept {
  switch (kind) {
    case WeatherKind::Rain: return "rain";
    case WeatherKind::Snow: return "snow";
    case WeatherKind::Fog: return "fog";
    case WeatherKind::Lightning: return "lightning";
  }
  return "rain";
}

WeatherKind parse_weather_kind(const std::string& name) {
  if (name == "rain") return WeatherKind::Rain;
  if (name == "snow") return WeatherKind::Snow;
  if (name == "fog") return WeatherKind::Fog;
  if (name == "lightning") return WeatherKind::Lightning;
  throw Error(Errc::InvalidParams, "unknown weather kind '" + name + "'");
}

void validate(const WeatherMarkParams& p) {
  require(std::isfinite(p.intensity) && p.intensity >= 0.0 && p.intensity <= 1.0, "intensity must lie in [0, 1]");
  const RainKnobs& r = p.rain;
  require(std::isfinite(r.density) && r.density >= 0.0, "rain density must be >= 0");
  require(std::isfinite(r.length) && r.length >= 0.0, "rain length must be >= 0");
  require(std::isfinite(r.thickness) && r.thickness > 0.0, "rain thickness must be > 0");
  require(std::isfinite(r.angle_deg) && std::isfinite(r.angle_jitter_deg) && r.angle_jitter_deg >= 0.0,
          "rain angles must be finite, jitter >= 0");
  require(r.opacity >= 0.0 && r.opacity <= 1.0, "rain opacity must lie in [0, 1]");
  const SnowKnobs& s = p.snow;
  require(std::isfinite(s.density) && s.density >= 0.0, "snow density must be >= 0");
  require(s.radius_min > 0.0 && s.radius_max >= s.radius_min && std::isfinite(s.radius_max),
          "snow radius range must satisfy 0 < min <= max");
  require(s.opacity >= 0.0 && s.opacity <= 1.0, "snow opacity must lie in [0, 1]");
  const LightningKnobs& l = p.lightning;
  require(std::isfinite(l.gain) && l.gain >= 0.0, "lightning gain must be >= 0");
  require(std::isfinite(l.falloff) && l.falloff > 0.0, "lightning falloff must be > 0");
  require(!l.center_x || (*l.center_x >= 0.0 && *l.center_x <= 1.0), "lightning center_x must lie in [0, 1]");
  require(!l.center_y || (*l.center_y >= 0.0 && *l.center_y <= 1.0), "lightning center_y must lie in [0, 1]");
}

std::vector<Streak> rain_streaks(const WeatherMarkParams& params, int w, int h) {
  const RainKnobs& r = params.rain;
  Rng rng(params.seed);
  std::vector<Streak> out(mark_count(r.density, w, h));
  for (Streak& s : out) {
    double x = rng.uniform(0.0, w);
    double y = rng.uniform(0.0, h);
    double len = r.length * rng.uniform(0.5, 1.0);
    double angle = (r.angle_deg + rng.uniform(-r.angle_jitter_deg, r.angle_jitter_deg)) * std::numbers::pi / 180.0;
    s = {x, y, x + std::sin(angle) * len, y + std::cos(angle) * len};
  }
  return out;
}

std::vector<Flake> snow_flakes(const WeatherMarkParams& params, int w, int h) {
  const SnowKnobs& s = params.snow;
  Rng rng(params.seed);
  std::vector<Flake> out(mark_count(s.density, w, h));
  for (Flake& f : out) {
    double x = rng.uniform(0.0, w);
    double y = rng.uniform(0.0, h);
    f = {x, y, rng.uniform(s.radius_min, s.radius_max)};
  }
  return out;
}

std::vector<float> weather_alpha(const WeatherMarkParams& params, int w, int h) {
  validate(params);
  std::vector<float> alpha(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0f);
  if (params.intensity == 0.0) return alpha;
  auto at = [&](int x, int y) -> float& { return alpha[static_cast<std::size_t>(y) * w + x]; };

  switch (params.kind) {
    case WeatherKind::Rain: {
      const float a = static_cast<float>(params.intensity * params.rain.opacity);
      const double half = params.rain.thickness / 2.0;
      for (const Streak& s : rain_streaks(params, w, h)) {
        int xa = std::max(0, static_cast<int>(std::floor(std::min(s.x0, s.x1) - half)));
        int xb = std::min(w - 1, static_cast<int>(std::ceil(std::max(s.x0, s.x1) + half)));
        int ya = std::max(0, static_cast<int>(std::floor(std::min(s.y0, s.y1) - half)));
        int yb = std::min(h - 1, static_cast<int>(std::ceil(std::max(s.y0, s.y1) + half)));
        for (int y = ya; y <= yb; ++y)
          for (int x = xa; x <= xb; ++x)
            if (segment_distance_sq(x + 0.5, y + 0.5, s) <= half * half) at(x, y) = std::max(at(x, y), a);
      }
      break;
    }
    case WeatherKind::Snow: {
      const double peak = params.intensity * params.snow.opacity;
      for (const Flake& f : snow_flakes(params, w, h)) {
        int xa = std::max(0, static_cast<int>(std::floor(f.cx - f.radius)));
        int xb = std::min(w - 1, static_cast<int>(std::ceil(f.cx + f.radius)));
        int ya = std::max(0, static_cast<int>(std::floor(f.cy - f.radius)));
        int yb = std::min(h - 1, static_cast<int>(std::ceil(f.cy + f.radius)));
        for (int y = ya; y <= yb; ++y) {
          for (int x = xa; x <= xb; ++x) {
            double d = std::hypot(x + 0.5 - f.cx, y + 0.5 - f.cy);
            if (d >= f.radius) continue;
            at(x, y) = std::max(at(x, y), static_cast<float>(peak * (1.0 - d / f.radius)));
          }
        }
      }
      break;
    }
    case WeatherKind::Fog:
      std::fill(alpha.begin(), alpha.end(), static_cast<float>(params.intensity));
      break;
    case WeatherKind::Lightning: {
      const LightningKnobs& l = params.lightning;
      Rng rng(params.seed);
      double ux = rng.uniform();
      double uy = rng.uniform();
      double cx = l.center_x.value_or(ux) * w;
      double cy = l.center_y.value_or(uy) * h;
      double sigma = l.falloff * std::hypot(static_cast<double>(w), static_cast<double>(h));
      double inv = 1.0 / (2.0 * sigma * sigma);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double dx = x + 0.5 - cx;
          double dy = y + 0.5 - cy;
          double g = std::min(1.0, l.gain * std::exp(-(dx * dx + dy * dy) * inv));
          at(x, y) = static_cast<float>(params.intensity * g);
        }
      }
      break;
    }
  }
  return alpha;
}

Rgb weather_overlay_color(const WeatherMarkParams& params) noexcept {
  switch (params.kind) {
    case WeatherKind::Rain: return params.rain.color;
    case WeatherKind::Snow: return params.snow.color;
    case WeatherKind::Fog: return params.fog.color;
    case WeatherKind::Lightning: return params.lightning.color;
  }
  return params.fog.color;
}

ImageRGB composite(const ImageRGB& image, const std::vector<float>& alpha, const Rgb& overlay) {
  const std::size_t n = static_cast<std::size_t>(image.width()) * static_cast<std::size_t>(image.height());
  if (alpha.size() != n) throw Error(Errc::DimMismatch, "alpha mask does not match image dims");
  ImageRGB out = image;
  auto px = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const float a = alpha[i];
    if (a <= 0.0f) continue;
    for (int ch = 0; ch < 3; ++ch) {
      float src = px[3 * i + ch];
      float v = src + a * (static_cast<float>(overlay[static_cast<std::size_t>(ch)]) - src);
      px[3 * i + ch] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

ImageRGB apply_weather_mark(const ImageRGB& image, const WeatherMarkParams& params) {
  validate(params);
  if (image.empty() || params.intensity == 0.0) return image;
  return composite(image, weather_alpha(params, image.width(), image.height()), weather_overlay_color(params));
}

}  // namespace segfuse
