// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Config-driven vote-over-TTA run: every source is one external predictor with its
// own inference settings; per scene each source's aggregated map is argmaxed and the
// labels are majority-voted.
//
//   { "format": 1, "manifest": "val.json", "registry": "predictors.json",
//     "output_dir": "out",
//     "sources": [ { "id": "setr", "predictor": "setr" },
//                  { "id": "setr_tta", "predictor": "setr",
//                    "scales": [0.1, 0.5, 1.0, 1.5], "flip": true,
//                    "window": [640, 640], "stride": [427, 427] } ],
//     "priority": ["setr", "setr_tta"], "abstain_ignore": false,
//     "evaluate": true, "save_sources": false }

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segfuse/fusion.hpp"
#include "segfuse/metrics.hpp"

namespace segfuse {

struct PipelineSource {
  std::string id;
  std::string predictor;
  TtaConfig tta;  // scales {1.0} and no flip/window when unspecified
};

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path registry;
  std::filesystem::path output_dir;
  std::vector<PipelineSource> sources;
  std::vector<std::string> priority;
  bool abstain_ignore = false;
  bool evaluate = true;
  bool save_sources = false;
};

PipelineConfig parse_pipeline_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
PipelineConfig parse_pipeline(const std::filesystem::path& path);

struct PipelineResult {
  std::vector<std::filesystem::path> outputs;  // voted label PNG per scene, manifest order
  std::optional<EvalReport> report;
};

/// Writes <output_dir>/<scene id>.png, optionally <output_dir>/sources/<source>/<id>.png,
/// and report.json / report.txt when evaluating. Scenes run in parallel; outputs do
/// not depend on `threads`.
PipelineResult run_pipeline(const PipelineConfig& config, unsigned threads = 1);

}  // namespace segfuse
