// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/pipeline.hpp"

#include <memory>
#include <unordered_set>

#include "segfuse/bridge.hpp"
#include "segfuse/ensemble.hpp"
#include "segfuse/io.hpp"
#include "segfuse/manifest.hpp"
#include "segfuse/parallel.hpp"

namespace segfuse {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(Errc::SchemaError, "pipeline field '" + field + "': " + what);
}

std::filesystem::path path_field(const json& doc, const char* key, const std::filesystem::path& base) {
  if (!doc.contains(key) || !doc[key].is_string()) fail(key, "expected a path string");
  std::filesystem::path p(doc[key].get<std::string>());
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::pair<int, int> int_pair(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    fail(field, "expected [x, y] integers");
  return {v[0].get<int>(), v[1].get<int>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

PipelineConfig parse_pipeline_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) fail("<root>", "expected an object");
  if (!doc.contains("format") || doc["format"] != 1) fail("format", "expected 1");
  PipelineConfig cfg;
  cfg.manifest = path_field(doc, "manifest", base_dir);
  cfg.registry = path_field(doc, "registry", base_dir);
  cfg.output_dir = path_field(doc, "output_dir", base_dir);

  if (!doc.contains("sources") || !doc["sources"].is_array() || doc["sources"].empty())
    fail("sources", "expected a non-empty array");
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < doc["sources"].size(); ++i) {
    const std::string at = "sources[" + std::to_string(i) + "]";
    const json& s = doc["sources"][i];
    if (!s.is_object()) fail(at, "expected an object");
    PipelineSource src;
    if (!s.contains("predictor") || !s["predictor"].is_string()) fail(at + ".predictor", "expected a string");
    src.predictor = s["predictor"].get<std::string>();
    src.id = s.value("id", src.predictor);
    if (!ids.insert(src.id).second) fail(at + ".id", "duplicate source id '" + src.id + "'");
    src.tta.scales = {1.0};
    if (s.contains("scales")) {
      if (!s["scales"].is_array() || s["scales"].empty()) fail(at + ".scales", "expected a non-empty array");
      src.tta.scales.clear();
      for (const json& v : s["scales"]) {
        if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() <= 8.0))
          fail(at + ".scales", "scales must lie in (0, 8]");
        src.tta.scales.push_back(v.get<double>());
      }
    }
    if (s.contains("flip")) {
      if (!s["flip"].is_boolean()) fail(at + ".flip", "expected a boolean");
      src.tta.horizontal_flip = s["flip"].get<bool>();
    }
    if (s.contains("window")) {
      auto [ww, wh] = int_pair(s["window"], at + ".window");
      auto [sx, sy] = s.contains("stride") ? int_pair(s["stride"], at + ".stride") : std::pair{ww, wh};
      if (ww < 1 || wh < 1 || sx < 1 || sy < 1) fail(at + ".window", "window and stride must be positive");
      src.tta.window = WindowParams{ww, wh, sx, sy};
    }
    cfg.sources.push_back(std::move(src));
  }
  if (doc.contains("priority")) {
    if (!doc["priority"].is_array()) fail("priority", "expected an array of source ids");
    for (const json& v : doc["priority"]) {
      if (!v.is_string()) fail("priority", "expected strings");
      cfg.priority.push_back(v.get<std::string>());
    }
  }
  cfg.abstain_ignore = doc.value("abstain_ignore", false);
  cfg.evaluate = doc.value("evaluate", true);
  cfg.save_sources = doc.value("save_sources", false);
  return cfg;
}

PipelineConfig parse_pipeline(const std::filesystem::path& path) {
  return parse_pipeline_json(read_json(path), path.parent_path());
}

PipelineResult run_pipeline(const PipelineConfig& cfg, unsigned threads) {
  const SceneManifest manifest = parse_manifest(cfg.manifest);
  const auto registry = load_registry(cfg.registry);

  std::vector<std::unique_ptr<ExternalPredictor>> predictors;
  std::vector<std::string> source_ids;
  for (const PipelineSource& s : cfg.sources) {
    PredictorSpec spec = find_predictor(registry, s.predictor);
    if (spec.expected_classes != manifest.num_classes())
      throw Error(Errc::ClassMismatch, "predictor '" + spec.id + "' declares " + std::to_string(spec.expected_classes) +
                                           " classes, manifest has " + std::to_string(manifest.num_classes()));
    predictors.push_back(std::make_unique<ExternalPredictor>(std::move(spec)));
    source_ids.push_back(s.id);
  }

  std::filesystem::create_directories(cfg.output_dir);
  if (cfg.save_sources)
    for (const std::string& id : source_ids) std::filesystem::create_directories(cfg.output_dir / "sources" / id);

  VoteConfig vote;
  vote.priority = cfg.priority;
  vote.treat_ignore_as_abstain = cfg.abstain_ignore;

  PipelineResult result;
  result.outputs.resize(manifest.scenes.size());
  parallel_for(manifest.scenes.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Scene& scene = manifest.scenes[i];
      const ImageRGB image = io::read_image_png(scene.image);
      std::vector<LabelMap> labels;
      labels.reserve(cfg.sources.size());
      for (std::size_t k = 0; k < cfg.sources.size(); ++k) {
        TtaConfig tta = cfg.sources[k].tta;
        tta.threads = 1;
        labels.push_back(argmax_labels(tta_aggregate(image, tta, *predictors[k]), manifest.ignore_index));
        if (cfg.save_sources)
          io::write_label_png(labels.back(), cfg.output_dir / "sources" / source_ids[k] / (scene.id + ".png"));
      }
      const std::filesystem::path out = cfg.output_dir / (scene.id + ".png");
      io::write_label_png(majority_vote(labels, source_ids, vote), out);
      result.outputs[i] = out;
    }
  });

  if (cfg.evaluate) {
    EvalReport report = evaluate_manifest(manifest, cfg.output_dir, {});
    write_text(cfg.output_dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_text(cfg.output_dir / "report.txt", report_to_text(report));
    result.report = std::move(report);
  }
  return result;
}

}  // namespace segfuse
