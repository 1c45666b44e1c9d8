// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Augmentation recipes: an ordered list of op descriptors applied to every scene of a
// manifest. Recipe JSON:
//
//   { "format": 1, "seed": 7, "suffix": "_rain",
//     "ops": [ { "op": "weather", "kind": "rain", "intensity": 0.6 },
//              { "op": "random_scale_crop_pad", "short_min": 448, "short_max": 1882,
//                "long_cap": 3584, "crop_w": 896, "crop_h": 896 },
//              { "op": "random_hflip", "prob": 0.5 },
//              { "op": "photometric" } ] }
//
// Geometric ops: identity, hflip, vflip, rotate90 {k}, scale {factor},
// resize {width, height}, crop {x, y, w, h}, pad {width, height, fill?}.
// Any op may carry its own "seed"; the seed an op sees for a scene is
// derive_seed(op seed or recipe seed, scene id, op index).

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "segfuse/augment.hpp"
#include "segfuse/manifest.hpp"

namespace segfuse {

struct WeatherOp {
  WeatherMarkParams params;
  std::optional<std::uint64_t> seed;
};

struct GeometricOp {
  GeometricSpec spec;
};

struct RandomFlipOp {
  double probability = 0.5;
  std::optional<std::uint64_t> seed;
};

struct ScaleCropOp {
  ScaleCropParams params;
  std::optional<std::uint64_t> seed;
};

struct PhotometricOp {
  PhotometricConfig config;
  std::optional<std::uint64_t> seed;
};

using RecipeOp = std::variant<WeatherOp, GeometricOp, RandomFlipOp, ScaleCropOp, PhotometricOp>;

struct Recipe {
  std::uint64_t seed = 0;
  std::string suffix;
  std::vector<RecipeOp> ops;
};

Recipe parse_recipe_json(const nlohmann::json& doc);
Recipe parse_recipe(const std::filesystem::path& path);

AugmentedPair apply_recipe(const ImageRGB& image, const LabelMap& labels, const Recipe& recipe,
                           std::string_view scene_id);

/// Writes <out_dir>/images/<id><suffix>.png, <out_dir>/gt/<id><suffix>.png and
/// <out_dir>/manifest.json; returns the written manifest. Scenes run in parallel,
/// each with its own derived seeds, so output does not depend on `threads`.
SceneManifest augment_dataset(const SceneManifest& manifest, const Recipe& recipe, const std::filesystem::path& out_dir,
                              unsigned threads = 1);

}  // namespace segfuse
