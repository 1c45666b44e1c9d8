// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "segfuse/core.hpp"

namespace segfuse {

struct Scene {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path gt;
  std::optional<std::string> weather;  // rain, snow, fog, clear, lightning
};

struct SceneManifest {
  std::vector<std::string> classes;
  Label ignore_index = kDefaultIgnoreIndex;
  std::vector<Scene> scenes;

  int num_classes() const noexcept { return static_cast<int>(classes.size()); }
};

inline constexpr int kManifestFormat = 1;

/// Validates against the manifest schema; SchemaError messages name the offending
/// field path (e.g. "scenes[3].gt"). Relative paths resolve against base_dir.
SceneManifest parse_manifest_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
SceneManifest parse_manifest(const std::filesystem::path& path);

/// Paths are written relative to the manifest's directory when they lie beneath it.
nlohmann::json manifest_to_json(const SceneManifest& manifest, const std::filesystem::path& base_dir);
void write_manifest(const SceneManifest& manifest, const std::filesystem::path& path);

/// Reads a JSON document, mapping parse failures to SchemaError.
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace segfuse
