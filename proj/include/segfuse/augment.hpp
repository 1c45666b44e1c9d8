// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "segfuse/core.hpp"
#include "segfuse/fusion.hpp"
#include "segfuse/weather.hpp"

namespace segfuse {

namespace geom {
struct Identity {};
struct HFlip {};
struct VFlip {};
/// Clockwise quarter turns: (x, y) -> (h - 1 - y, x) for k = 1.
struct Rotate90 {
  int k = 1;
};
struct Scale {
  double factor = 1.0;
};
/// Explicit output size; the plain-resampling stand-in for external upscalers.
struct Resize {
  int width = 0;
  int height = 0;
};
struct Crop {
  Rect rect;
};
/// Pads on the right and bottom. Labels pad with their ignore index.
struct PadTo {
  int width = 0;
  int height = 0;
  Rgb fill{0, 0, 0};
};
}  // namespace geom

using GeometricSpec = std::variant<geom::Identity, geom::HFlip, geom::VFlip, geom::Rotate90, geom::Scale, geom::Resize,
                                   geom::Crop, geom::PadTo>;

struct AugmentedPair {
  ImageRGB image;
  LabelMap labels;
};

/// One coordinate transform applied to both rasters; image bilinear, labels nearest.
AugmentedPair joint_geometric(const ImageRGB& image, const LabelMap& labels, const GeometricSpec& spec);

/// The label transform applied plane-wise to a probability map (nearest sampling,
/// zero padding). Exposed so image/label alignment can be checked through argmax.
ProbMap geometric_nearest(const ProbMap& prob, const GeometricSpec& spec);

struct ScaleCropParams {
  int short_min = 448;
  int short_max = 1882;
  int long_cap = 3584;
  int crop_w = 896;
  int crop_h = 896;
  Rgb image_fill{0, 0, 0};
};

/// Short side drawn uniformly from [short_min, short_max], aspect kept, long side
/// capped at long_cap; then padded up to the crop size if needed and randomly cropped.
AugmentedPair random_scale_crop_pad(const ImageRGB& image, const LabelMap& labels, const ScaleCropParams& params,
                                    std::uint64_t seed);

/// Horizontal flip of both rasters with probability `probability`.
AugmentedPair random_hflip(const ImageRGB& image, const LabelMap& labels, double probability, std::uint64_t seed);

struct PhotometricConfig {
  double probability = 0.5;  // per sub-transform
  double brightness_delta = 32.0;
  double contrast_min = 0.5;
  double contrast_max = 1.5;
  double saturation_min = 0.5;
  double saturation_max = 1.5;
  double hue_delta_deg = 18.0;
};

/// The sub-transforms a seed selects; unset means skipped.
struct PhotometricPlan {
  std::optional<double> brightness;
  std::optional<double> contrast;
  std::optional<double> saturation;
  std::optional<double> hue_deg;

  bool is_identity() const noexcept { return !brightness && !contrast && !saturation && !hue_deg; }
};

PhotometricPlan sample_photometric(std::uint64_t seed, const PhotometricConfig& config = {});

/// Applied in order brightness, contrast, saturation, hue; clamped to [0, 255] after
/// each step and rounded to nearest at the end.
ImageRGB apply_photometric(const ImageRGB& image, const PhotometricPlan& plan);

ImageRGB photometric_distort(const ImageRGB& image, std::uint64_t seed, const PhotometricConfig& config = {});

}  // namespace segfuse
