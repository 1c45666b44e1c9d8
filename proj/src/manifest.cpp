// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "segfuse/io.hpp"

namespace segfuse {
namespace {

using nlohmann::json;

const std::vector<std::string> kWeatherTags = {"rain", "snow", "fog", "clear", "lightning"};

[[noreturn]] void schema_error(const std::string& field, const std::string& what) {
  throw Error(Errc::SchemaError, "manifest field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  std::string field = path.empty() ? key : path + "." + key;
  if (!v.is_string()) schema_error(field, "expected a string");
  std::string s = v.get<std::string>();
  if (s.empty()) schema_error(field, "must not be empty");
  return s;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string relative_if_below(const std::filesystem::path& p, const std::filesystem::path& base) {
  auto rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

}  // namespace

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaError, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

SceneManifest parse_manifest_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) schema_error("<root>", "expected an object");
  const json& format = require(doc, "format", "");
  if (!format.is_number_integer() || format.get<int>() != kManifestFormat)
    schema_error("format", "expected " + std::to_string(kManifestFormat));

  SceneManifest m;
  const json& classes = require(doc, "classes", "");
  if (!classes.is_array() || classes.empty()) schema_error("classes", "expected a non-empty array of strings");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!classes[i].is_string()) schema_error("classes[" + std::to_string(i) + "]", "expected a string");
    m.classes.push_back(classes[i].get<std::string>());
  }

  if (auto it = doc.find("ignore_index"); it != doc.end()) {
    if (!it->is_number_integer()) schema_error("ignore_index", "expected an integer");
    long long v = it->get<long long>();
    if (v < 0 || v > 65535) schema_error("ignore_index", "must lie in [0, 65535]");
    if (v != 255 && v < static_cast<long long>(m.classes.size()))
      schema_error("ignore_index", "must be 255 or at least the class count");
    m.ignore_index = static_cast<Label>(v);
  }

  const json& scenes = require(doc, "scenes", "");
  if (!scenes.is_array()) schema_error("scenes", "expected an array");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::string path = "scenes[" + std::to_string(i) + "]";
    const json& s = scenes[i];
    if (!s.is_object()) schema_error(path, "expected an object");
    Scene scene;
    scene.id = require_string(s, "id", path);
    scene.image = resolve(base_dir, require_string(s, "image", path));
    scene.gt = resolve(base_dir, require_string(s, "gt", path));
    if (auto w = s.find("weather"); w != s.end() && !w->is_null()) {
      if (!w->is_string()) schema_error(path + ".weather", "expected a string");
      std::string tag = w->get<std::string>();
      if (std::find(kWeatherTags.begin(), kWeatherTags.end(), tag) == kWeatherTags.end())
        schema_error(path + ".weather", "unknown tag '" + tag + "'");
      scene.weather = tag;
    }
    if (!seen.insert(scene.id).second) throw Error(Errc::DuplicateSceneId, "duplicate scene id '" + scene.id + "'");
    m.scenes.push_back(std::move(scene));
  }
  return m;
}

SceneManifest parse_manifest(const std::filesystem::path& path) {
  return parse_manifest_json(read_json(path), path.parent_path());
}

nlohmann::json manifest_to_json(const SceneManifest& manifest, const std::filesystem::path& base_dir) {
  json doc;
  doc["format"] = kManifestFormat;
  doc["classes"] = manifest.classes;
  doc["ignore_index"] = manifest.ignore_index;
  json scenes = json::array();
  for (const Scene& s : manifest.scenes) {
    json entry{{"id", s.id}, {"image", relative_if_below(s.image, base_dir)}, {"gt", relative_if_below(s.gt, base_dir)}};
    if (s.weather) entry["weather"] = *s.weather;
    scenes.push_back(std::move(entry));
  }
  doc["scenes"] = std::move(scenes);
  return doc;
}

void write_manifest(const SceneManifest& manifest, const std::filesystem::path& path) {
  std::string text = manifest_to_json(manifest, path.parent_path()).dump(2) + "\n";
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace segfuse
