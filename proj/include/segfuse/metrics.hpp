// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "segfuse/core.hpp"
#include "segfuse/manifest.hpp"

namespace segfuse {

/// counts(g, p) = pixels with ground truth g predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const noexcept { return classes_; }
  std::uint64_t at(int gt, int pred) const { return counts_[index(gt, pred)]; }
  std::uint64_t& at(int gt, int pred) { return counts_[index(gt, pred)]; }

  /// Pixels whose gt equals gt.ignore_index() are skipped.
  void accumulate(const LabelMap& gt, const LabelMap& pred);
  void merge(const ConfusionMatrix& other);

  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  std::uint64_t row_sum(int gt) const;
  std::uint64_t col_sum(int pred) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t index(int gt, int pred) const noexcept {
    return static_cast<std::size_t>(gt) * static_cast<std::size_t>(classes_) + static_cast<std::size_t>(pred);
  }

  int classes_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& gt, const LabelMap& pred);

/// Classes with zero union are absent (nullopt), not zero.
std::vector<std::optional<double>> iou_per_class(const ConfusionMatrix& cm);

/// Mean of the present per-class IoUs. Throws NoValidPixels if none is present.
double miou(const ConfusionMatrix& cm);

/// trace / total. Throws NoValidPixels on an empty matrix.
double pixel_accuracy(const ConfusionMatrix& cm);

struct ClassIou {
  std::string name;
  std::optional<double> iou;
};

struct EvalReport {
  std::vector<ClassIou> per_class;
  double miou = 0.0;
  double pixel_accuracy = 0.0;
  std::uint64_t pixels_evaluated = 0;
  std::size_t scenes_evaluated = 0;
  std::vector<std::string> missing;  // scene ids without a prediction file

  // Secondary views; the headline numbers above come from one global matrix.
  std::optional<double> per_scene_mean_miou;
  std::map<std::string, double> miou_by_weather;
};

struct EvalOptions {
  bool strict = false;
  bool group_by_weather = false;
  unsigned threads = 1;
};

/// Prediction for scene `id` is `<pred_dir>/<id>.png` (label raster) or, failing
/// that, `<pred_dir>/<id>.sfpm` (argmax taken). Missing predictions are recorded
/// and skipped unless strict.
EvalReport evaluate_manifest(const SceneManifest& manifest, const std::filesystem::path& pred_dir,
                             const EvalOptions& options = {});

/// Builds a report from an already accumulated matrix.
EvalReport make_report(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

}  // namespace segfuse
