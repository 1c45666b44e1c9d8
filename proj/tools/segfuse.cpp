// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// segfuse: ensemble voting, tiled / multi-scale inference fusion, weather augmentation
// and mIoU evaluation over label PNG and SFPM probability rasters.
//
// Failures print one line "segfuse: error[<Kind>]: <message>" to stderr and exit
// 2 (usage), 3 (data) or 4 (predictor).

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "segfuse/bridge.hpp"
#include "segfuse/ensemble.hpp"
#include "segfuse/fusion.hpp"
#include "segfuse/io.hpp"
#include "segfuse/kernels.hpp"
#include "segfuse/manifest.hpp"
#include "segfuse/metrics.hpp"
#include "segfuse/pipeline.hpp"
#include "segfuse/recipe.hpp"

namespace fs = std::filesystem;
using namespace segfuse;

namespace {

[[noreturn]] void usage(const std::string& what) { throw Error(Errc::Usage, what); }

bool has_ext(const fs::path& p, const char* ext) { return p.extension() == ext; }

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::pair<int, int> parse_dims(const std::string& text, const char* flag) {
  int a = 0;
  int b = 0;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> a)) usage(std::string(flag) + " expects WxH");
  if (in >> x) {
    if ((x != 'x' && x != 'X') || !(in >> b)) usage(std::string(flag) + " expects WxH");
  } else {
    b = a;
  }
  if (a < 1 || b < 1) usage(std::string(flag) + " dims must be positive");
  return {a, b};
}

LabelMap load_labels(const fs::path& p, Label ignore) {
  if (has_ext(p, ".sfpm")) return argmax_labels(io::read_sfpm(p), ignore);
  return io::read_label_png(p, ignore);
}

struct PredictorFlags {
  std::string registry;
  std::string id;
  std::string command;
  int classes = 0;
  bool persistent = false;
  bool parallel_safe = false;

  void add(CLI::App* app) {
    app->add_option("--registry", registry, "Predictor registry JSON");
    app->add_option("--predictor", id, "Predictor id within the registry");
    app->add_option("--cmd", command, "Predictor command line (whitespace separated), instead of a registry");
    app->add_option("--classes", classes, "Class count emitted by --cmd");
    app->add_flag("--persistent", persistent, "--cmd speaks the persistent-stream mode");
    app->add_flag("--parallel-safe", parallel_safe, "--cmd may run concurrently");
  }

  PredictorSpec resolve() const {
    if (!registry.empty()) {
      if (id.empty()) usage("--registry needs --predictor");
      return find_predictor(load_registry(registry), id);
    }
    if (command.empty()) usage("give --registry/--predictor or --cmd");
    if (classes < 1) usage("--cmd needs --classes");
    PredictorSpec spec;
    spec.id = id.empty() ? "cmd" : id;
    std::istringstream in(command);
    for (std::string arg; in >> arg;) spec.command.push_back(arg);
    spec.expected_classes = classes;
    spec.io_mode = persistent ? IoMode::Persistent : IoMode::PerImage;
    spec.parallel_safe = parallel_safe;
    return spec;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"segfuse: segmentation ensemble, fusion, augmentation and evaluation toolkit"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

  // vote
  auto* vote = app.add_subcommand("vote", "Per-pixel majority vote over K label PNG / SFPM inputs");
  std::vector<std::string> vote_inputs;
  std::string vote_out;
  std::string vote_ids;
  std::string vote_priority;
  bool vote_abstain = false;
  int vote_ignore = kDefaultIgnoreIndex;
  vote->add_option("inputs", vote_inputs, "Predictions (.png labels or .sfpm probabilities)")->required();
  vote->add_option("-o,--output", vote_out, "Output label PNG")->required();
  vote->add_option("--ids", vote_ids, "Comma-separated predictor ids (default: file stems)");
  vote->add_option("--priority", vote_priority, "Comma-separated ids, highest priority first");
  vote->add_flag("--abstain-ignore", vote_abstain, "Ignore-index votes abstain");
  vote->add_option("--ignore-index", vote_ignore, "Ignore index")->capture_default_str();

  // avg
  auto* avg = app.add_subcommand("avg", "Weighted average of K SFPM maps");
  std::vector<std::string> avg_inputs;
  std::string avg_out;
  std::vector<float> avg_weights;
  avg->add_option("inputs", avg_inputs, "SFPM inputs")->required();
  avg->add_option("-o,--output", avg_out, "Output SFPM")->required();
  avg->add_option("--weights", avg_weights, "Per-input weights")->delimiter(',');

  // tile
  auto* tile = app.add_subcommand("tile", "Sliding-window prediction of one image");
  std::string tile_image;
  std::string tile_out;
  std::string tile_window;
  std::string tile_stride;
  PredictorFlags tile_pred;
  tile->add_option("--image", tile_image, "Input RGB PNG")->required();
  tile->add_option("-o,--output", tile_out, "Output SFPM")->required();
  tile->add_option("--window", tile_window, "Window WxH")->required();
  tile->add_option("--stride", tile_stride, "Stride WxH (default: window)");
  tile_pred.add(tile);

  // tta
  auto* tta = app.add_subcommand("tta", "Multi-scale (and flipped) prediction averaged on the original grid");
  std::string tta_image;
  std::string tta_out;
  std::vector<double> tta_scales;
  bool tta_flip = false;
  std::string tta_window;
  std::string tta_stride;
  PredictorFlags tta_pred;
  tta->add_option("--image", tta_image, "Input RGB PNG")->required();
  tta->add_option("-o,--output", tta_out, "Output SFPM")->required();
  tta->add_option("--scales", tta_scales, "Scale factors (default 0.1,0.25,0.5,0.75,1,1.25,1.5)")->delimiter(',');
  tta->add_flag("--flip", tta_flip, "Add horizontally flipped variants");
  tta->add_option("--window", tta_window, "Sliding window WxH per scale");
  tta->add_option("--stride", tta_stride, "Stride WxH (default: window)");
  tta_pred.add(tta);

  // eval
  auto* eval = app.add_subcommand("eval", "mIoU report for a manifest and a prediction directory");
  std::string eval_manifest;
  std::string eval_preds;
  std::string eval_json;
  std::string eval_text;
  bool eval_strict = false;
  bool eval_weather = false;
  eval->add_option("--manifest", eval_manifest, "Scene manifest JSON")->required();
  eval->add_option("--pred-dir", eval_preds, "Directory of <scene id>.png or .sfpm predictions")->required();
  eval->add_flag("--strict", eval_strict, "Fail on a missing prediction");
  eval->add_option("--json", eval_json, "Write the JSON report here");
  eval->add_option("--report", eval_text, "Write the text report here (default: stdout)");
  eval->add_flag("--by-weather", eval_weather, "Add mIoU per weather tag");

  // augment
  auto* augment = app.add_subcommand("augment", "Materialize an augmented dataset from a recipe");
  std::string aug_manifest;
  std::string aug_recipe;
  std::string aug_out;
  augment->add_option("--manifest", aug_manifest, "Source manifest")->required();
  augment->add_option("--recipe", aug_recipe, "Recipe JSON")->required();
  augment->add_option("--out", aug_out, "Output directory")->required();

  // convert
  auto* convert = app.add_subcommand("convert", "SFPM -> label PNG (argmax) or label PNG -> SFPM (one-hot)");
  std::string conv_in;
  std::string conv_out;
  int conv_classes = 0;
  int conv_ignore = kDefaultIgnoreIndex;
  convert->add_option("input", conv_in, "Input file")->required();
  convert->add_option("output", conv_out, "Output file")->required();
  convert->add_option("--classes", conv_classes, "Class count for one-hot output");
  convert->add_option("--ignore-index", conv_ignore, "Ignore index")->capture_default_str();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Vote-over-TTA run driven by a config file");
  std::string pipe_config;
  pipeline->add_option("--config", pipe_config, "Pipeline config JSON")->required();

  auto* isa = app.add_subcommand("isa", "Print the SIMD kernel set in use");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::fprintf(stderr, "segfuse: error[Usage]: %s\n", msg.c_str());
    return 2;
  }

  if (*vote) {
    if (vote_ignore < 0 || vote_ignore > 65535) usage("--ignore-index must lie in [0, 65535]");
    std::vector<LabelMap> maps;
    for (const auto& p : vote_inputs) maps.push_back(load_labels(p, static_cast<Label>(vote_ignore)));
    std::vector<std::string> ids = split(vote_ids, ',');
    if (ids.empty())
      for (const auto& p : vote_inputs) ids.push_back(fs::path(p).stem().string());
    if (ids.size() != maps.size()) usage("--ids must name every input");
    VoteConfig cfg;
    cfg.priority = split(vote_priority, ',');
    cfg.treat_ignore_as_abstain = vote_abstain;
    cfg.threads = threads;
    io::write_label_png(majority_vote(maps, ids, cfg), vote_out);
  } else if (*avg) {
    std::vector<ProbMap> maps;
    for (const auto& p : avg_inputs) maps.push_back(io::read_sfpm(p));
    io::write_sfpm(soft_average(maps, avg_weights), avg_out);
  } else if (*tile) {
    auto [ww, wh] = parse_dims(tile_window, "--window");
    auto [sx, sy] = tile_stride.empty() ? std::pair{ww, wh} : parse_dims(tile_stride, "--stride");
    ExternalPredictor predictor(tile_pred.resolve());
    ImageRGB image = io::read_image_png(tile_image);
    io::write_sfpm(predict_tiled(image, {ww, wh, sx, sy}, predictor, threads), tile_out);
  } else if (*tta) {
    TtaConfig cfg;
    if (!tta_scales.empty()) cfg.scales = tta_scales;
    cfg.horizontal_flip = tta_flip;
    if (!tta_window.empty()) {
      auto [ww, wh] = parse_dims(tta_window, "--window");
      auto [sx, sy] = tta_stride.empty() ? std::pair{ww, wh} : parse_dims(tta_stride, "--stride");
      cfg.window = WindowParams{ww, wh, sx, sy};
    }
    cfg.threads = threads;
    ExternalPredictor predictor(tta_pred.resolve());
    ImageRGB image = io::read_image_png(tta_image);
    io::write_sfpm(tta_aggregate(image, cfg, predictor), tta_out);
  } else if (*eval) {
    EvalOptions opts;
    opts.strict = eval_strict;
    opts.group_by_weather = eval_weather;
    opts.threads = threads;
    EvalReport report = evaluate_manifest(parse_manifest(eval_manifest), eval_preds, opts);
    for (const auto& id : report.missing) std::fprintf(stderr, "segfuse: warning[MissingPrediction]: %s\n", id.c_str());
    if (!eval_json.empty()) write_text(eval_json, report_to_json(report).dump(2) + "\n");
    if (!eval_text.empty())
      write_text(eval_text, report_to_text(report));
    else
      std::fputs(report_to_text(report).c_str(), stdout);
  } else if (*augment) {
    augment_dataset(parse_manifest(aug_manifest), parse_recipe(aug_recipe), aug_out, threads);
  } else if (*convert) {
    if (conv_ignore < 0 || conv_ignore > 65535) usage("--ignore-index must lie in [0, 65535]");
    fs::path in(conv_in);
    fs::path out(conv_out);
    if (has_ext(in, ".sfpm") && has_ext(out, ".png")) {
      io::write_label_png(argmax_labels(io::read_sfpm(in), static_cast<Label>(conv_ignore)), out);
    } else if (has_ext(in, ".png") && has_ext(out, ".sfpm")) {
      if (conv_classes < 1) usage("label PNG -> SFPM needs --classes");
      io::write_sfpm(one_hot(io::read_label_png(in, static_cast<Label>(conv_ignore)), conv_classes), out);
    } else {
      usage("convert supports .sfpm -> .png and .png -> .sfpm");
    }
  } else if (*pipeline) {
    PipelineResult result = run_pipeline(parse_pipeline(pipe_config), threads);
    if (result.report) std::fputs(report_to_text(*result.report).c_str(), stdout);
  } else if (*isa) {
    std::printf("%s\n", kernels::active().name);
  }
  return 0;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::fprintf(stderr, "segfuse: error[%s]: %s\n", errc_name(e.code()), msg.c_str());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "segfuse: error[Internal]: %s\n", e.what());
    return 3;
  }
}
