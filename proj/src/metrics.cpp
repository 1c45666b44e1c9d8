// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include "segfuse/io.hpp"
#include "segfuse/parallel.hpp"

namespace segfuse {

ConfusionMatrix::ConfusionMatrix(int num_classes) : classes_(num_classes) {
  if (num_classes < 1) throw Error(Errc::EmptyInput, "confusion matrix needs at least one class");
  counts_.assign(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes), 0);
}

void ConfusionMatrix::accumulate(const LabelMap& gt, const LabelMap& pred) {
  if (gt.width() != pred.width() || gt.height() != pred.height())
    throw Error(Errc::DimMismatch, "ground truth and prediction dims differ");
  const Label ignore = gt.ignore_index();
  auto g = gt.data();
  auto p = pred.data();
  // Validate first so a failure leaves the matrix untouched.
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == ignore) continue;
    if (g[i] >= classes_)
      throw Error(Errc::ClassOutOfRange, "ground-truth label " + std::to_string(g[i]) + " out of range");
    if (p[i] >= classes_)
      throw Error(Errc::ClassOutOfRange, "predicted label " + std::to_string(p[i]) + " out of range");
  }
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] != ignore) ++counts_[index(g[i], p[i])];
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw Error(Errc::DimMismatch, "confusion matrices differ in class count");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (int c = 0; c < classes_; ++c) t += counts_[index(c, c)];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int gt) const {
  std::uint64_t s = 0;
  for (int p = 0; p < classes_; ++p) s += counts_[index(gt, p)];
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(int pred) const {
  std::uint64_t s = 0;
  for (int g = 0; g < classes_; ++g) s += counts_[index(g, pred)];
  return s;
}

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& gt, const LabelMap& pred) {
  cm.accumulate(gt, pred);
  return cm;
}

std::vector<std::optional<double>> iou_per_class(const ConfusionMatrix& cm) {
  std::vector<std::optional<double>> out(static_cast<std::size_t>(cm.num_classes()));
  for (int c = 0; c < cm.num_classes(); ++c) {
    std::uint64_t tp = cm.at(c, c);
    std::uint64_t uni = cm.row_sum(c) + cm.col_sum(c) - tp;
    if (uni == 0) continue;
    out[static_cast<std::size_t>(c)] = static_cast<double>(tp) / static_cast<double>(uni);
  }
  return out;
}

double miou(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int present = 0;
  for (const auto& iou : iou_per_class(cm)) {
    if (!iou) continue;
    sum += *iou;
    ++present;
  }
  if (present == 0) throw Error(Errc::NoValidPixels, "no class has a non-empty union");
  return sum / present;
}

double pixel_accuracy(const ConfusionMatrix& cm) {
  std::uint64_t total = cm.total();
  if (total == 0) throw Error(Errc::NoValidPixels, "no pixels evaluated");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

EvalReport make_report(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
  EvalReport r;
  auto ious = iou_per_class(cm);
  for (std::size_t c = 0; c < ious.size(); ++c)
    r.per_class.push_back({c < class_names.size() ? class_names[c] : std::to_string(c), ious[c]});
  r.miou = miou(cm);
  r.pixel_accuracy = pixel_accuracy(cm);
  r.pixels_evaluated = cm.total();
  return r;
}

EvalReport evaluate_manifest(const SceneManifest& manifest, const std::filesystem::path& pred_dir,
                             const EvalOptions& options) {
  const int classes = manifest.num_classes();
  struct SceneResult {
    std::optional<ConfusionMatrix> cm;
    bool missing = false;
  };
  std::vector<SceneResult> results(manifest.scenes.size());

  parallel_for(results.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Scene& scene = manifest.scenes[i];
      LabelMap gt;
      try {
        gt = io::read_label_png(scene.gt, manifest.ignore_index);
      } catch (const Error& err) {
        throw Error(Errc::UnreadableGroundTruth, "scene '" + scene.id + "': " + err.what());
      }
      std::filesystem::path png = pred_dir / (scene.id + ".png");
      std::filesystem::path sfpm = pred_dir / (scene.id + ".sfpm");
      LabelMap pred;
      if (std::filesystem::exists(png)) {
        pred = io::read_label_png(png, manifest.ignore_index);
      } else if (std::filesystem::exists(sfpm)) {
        pred = argmax_labels(io::read_sfpm(sfpm), manifest.ignore_index);
      } else {
        if (options.strict) throw Error(Errc::MissingPrediction, "no prediction for scene '" + scene.id + "'");
        results[i].missing = true;
        continue;
      }
      ConfusionMatrix cm(classes);
      try {
        cm.accumulate(gt, pred);
      } catch (const Error& err) {
        throw Error(err.code(), "scene '" + scene.id + "': " + err.what());
      }
      results[i].cm = std::move(cm);
    }
  });

  // Reduced in manifest order.
  ConfusionMatrix global(classes);
  std::map<std::string, ConfusionMatrix> by_weather;
  std::vector<std::string> missing;
  std::size_t scenes = 0;
  double scene_sum = 0.0;
  std::size_t scene_count = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].missing) {
      missing.push_back(manifest.scenes[i].id);
      continue;
    }
    const ConfusionMatrix& cm = *results[i].cm;
    global.merge(cm);
    ++scenes;
    if (cm.total() > 0) {
      scene_sum += miou(cm);
      ++scene_count;
    }
    if (options.group_by_weather) {
      std::string tag = manifest.scenes[i].weather.value_or("untagged");
      by_weather.try_emplace(tag, classes).first->second.merge(cm);
    }
  }

  EvalReport report = make_report(global, manifest.classes);
  report.scenes_evaluated = scenes;
  report.missing = std::move(missing);
  if (scene_count > 0) report.per_scene_mean_miou = scene_sum / static_cast<double>(scene_count);
  for (const auto& [tag, cm] : by_weather)
    if (cm.total() > 0) report.miou_by_weather[tag] = miou(cm);
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["miou"] = report.miou;
  doc["pixel_accuracy"] = report.pixel_accuracy;
  nlohmann::json per_class = nlohmann::json::array();
  for (const ClassIou& c : report.per_class) {
    nlohmann::json entry{{"name", c.name}};
    entry["iou"] = c.iou ? nlohmann::json(*c.iou) : nlohmann::json(nullptr);
    per_class.push_back(std::move(entry));
  }
  doc["per_class"] = std::move(per_class);
  doc["pixels"] = report.pixels_evaluated;
  doc["scenes"] = report.scenes_evaluated;
  doc["missing"] = report.missing;
  if (report.per_scene_mean_miou) doc["per_scene_mean_miou"] = *report.per_scene_mean_miou;
  if (!report.miou_by_weather.empty()) doc["miou_by_weather"] = report.miou_by_weather;
  return doc;
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.6f", report.miou);
  out << "miou: " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.6f", report.pixel_accuracy);
  out << "pixel_accuracy: " << buf << "\n";
  out << "pixels: " << report.pixels_evaluated << "\n";
  out << "scenes: " << report.scenes_evaluated << "\n";
  if (report.per_scene_mean_miou) {
    std::snprintf(buf, sizeof(buf), "%.6f", *report.per_scene_mean_miou);
    out << "per_scene_mean_miou (not the headline metric): " << buf << "\n";
  }
  for (const auto& [tag, value] : report.miou_by_weather) {
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    out << "miou[" << tag << "]: " << buf << "\n";
  }
  out << "missing: " << report.missing.size() << "\n";
  for (const std::string& id : report.missing) out << "  - " << id << "\n";
  out << "\n";
  std::size_t width = 5;
  for (const ClassIou& c : report.per_class) width = std::max(width, c.name.size());
  auto pad = [width](const std::string& name) { return name + std::string(width - name.size() + 2, ' '); };
  out << pad("class") << "iou\n";
  for (const ClassIou& c : report.per_class) {
    if (c.iou) {
      std::snprintf(buf, sizeof(buf), "%.6f", *c.iou);
      out << pad(c.name) << buf << "\n";
    } else {
      out << pad(c.name) << "n/a\n";
    }
  }
  return out.str();
}

}  // namespace segfuse
