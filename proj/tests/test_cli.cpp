// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "segfuse/io.hpp"
#include "segfuse/manifest.hpp"
#include "workspace.hpp"

using namespace segfuse;
using namespace segfuse::test;

namespace {

std::string s(const std::filesystem::path& p) { return p.string(); }

void require_ok(const RunResult& r) {
  INFO(r.stderr_text);
  REQUIRE(r.exit_code == 0);
}

void check_error_line(const RunResult& r, int code, const std::string& kind) {
  CHECK(r.exit_code == code);
  CHECK(r.stderr_text.rfind("segfuse: error[" + kind + "]: ", 0) == 0);
  CHECK(std::count(r.stderr_text.begin(), r.stderr_text.end(), '\n') == 1);
}

}  // namespace

TEST_CASE("vote, avg and convert over files") {
  Workspace ws(1);
  Gen g(101);
  std::vector<std::string> args = {"vote"};
  for (int k = 0; k < 3; ++k) {
    auto p = ws.dir / ("p" + std::to_string(k) + ".png");
    io::write_label_png(random_labels(g, 9, 7, 3), p);
    args.push_back(s(p));
  }
  auto sf = ws.dir / "p3.sfpm";
  io::write_sfpm(random_prob(g, 3, 9, 7), sf);
  args.push_back(s(sf));
  args.insert(args.end(), {"-o", s(ws.dir / "v1.png"), "--priority", "p3,p0,p1,p2"});
  require_ok(run_cli(args, ws.dir.path()));
  args[args.size() - 3] = s(ws.dir / "v2.png");
  args.insert(args.begin(), {"--threads", "3"});
  require_ok(run_cli(args, ws.dir.path()));
  CHECK(slurp(ws.dir / "v1.png") == slurp(ws.dir / "v2.png"));

  io::write_sfpm(ProbMap(2, 1, 1, std::vector<float>{0.6f, 0.4f}), ws.dir / "a.sfpm");
  io::write_sfpm(ProbMap(2, 1, 1, std::vector<float>{0.2f, 0.8f}), ws.dir / "b.sfpm");
  require_ok(run_cli({"avg", s(ws.dir / "a.sfpm"), s(ws.dir / "b.sfpm"), "-o", s(ws.dir / "m.sfpm")}, ws.dir.path()));
  ProbMap m = io::read_sfpm(ws.dir / "m.sfpm");
  CHECK(m.at(0, 0, 0) == doctest::Approx(0.4));

  require_ok(run_cli({"convert", s(ws.dir / "m.sfpm"), s(ws.dir / "m.png")}, ws.dir.path()));
  CHECK(io::read_label_png(ws.dir / "m.png").at(0, 0) == 1);
  require_ok(run_cli({"convert", s(ws.dir / "m.png"), s(ws.dir / "oh.sfpm"), "--classes", "2"}, ws.dir.path()));
  CHECK(io::read_sfpm(ws.dir / "oh.sfpm").at(1, 0, 0) == 1.0f);
}

TEST_CASE("tile and tta through a registry predictor") {
  Workspace ws(1);
  const auto img = s(ws.dir / "images" / "scene0.png");
  require_ok(run_cli({"tile", "--image", img, "--registry", s(ws.registry), "--predictor", "m0", "--window", "16x16",
                      "--stride", "12", "-o", s(ws.dir / "t.sfpm")},
                     ws.dir.path()));
  ProbMap t = io::read_sfpm(ws.dir / "t.sfpm");
  CHECK(t.width() == 48);
  CHECK(t.is_normalized());
  for (const char* threads : {"1", "3"}) {
    require_ok(run_cli({"--threads", threads, "tta", "--image", img, "--registry", s(ws.registry), "--predictor", "m1",
                        "--scales", "0.5,1,1.5", "--flip", "-o", s(ws.dir / (std::string("tta") + threads + ".sfpm"))},
                       ws.dir.path()));
  }
  CHECK(slurp(ws.dir / "tta1.sfpm") == slurp(ws.dir / "tta3.sfpm"));
  require_ok(run_cli({"tta", "--image", img, "--cmd", std::string(SEGFUSE_STUB_PATH) + " --classes 4", "--classes", "4",
                      "--scales", "1", "-o", s(ws.dir / "u.sfpm")},
                     ws.dir.path()));
  for (float v : io::read_sfpm(ws.dir / "u.sfpm").data()) CHECK(v == 0.25f);
}

TEST_CASE("eval writes text and JSON reports") {
  Workspace ws(3);
  std::filesystem::create_directories(ws.dir / "preds");
  std::filesystem::copy_file(ws.dir / "gt" / "scene0.png", ws.dir / "preds" / "scene0.png");
  std::filesystem::copy_file(ws.dir / "gt" / "scene1.png", ws.dir / "preds" / "scene1.png");
  auto r = run_cli({"eval", "--manifest", s(ws.manifest), "--pred-dir", s(ws.dir / "preds"), "--json",
                    s(ws.dir / "r.json"), "--report", s(ws.dir / "r.txt"), "--by-weather"},
                   ws.dir.path());
  REQUIRE(r.exit_code == 0);
  CHECK(r.stderr_text.find("warning[MissingPrediction]: scene2") != std::string::npos);
  auto j = read_json(ws.dir / "r.json");
  CHECK(j["miou"] == 1.0);
  CHECK(j["missing"] == nlohmann::json::array({"scene2"}));
  CHECK(j["scenes"] == 2);
  auto strict = run_cli({"eval", "--manifest", s(ws.manifest), "--pred-dir", s(ws.dir / "preds"), "--strict"},
                        ws.dir.path());
  check_error_line(strict, 3, "MissingPrediction");
}

TEST_CASE("errors print one prefixed line and map to exit codes") {
  Workspace ws(1);
  check_error_line(run_cli({}, ws.dir.path()), 2, "Usage");
  check_error_line(run_cli({"vote", "-o", "x.png"}, ws.dir.path()), 2, "Usage");
  check_error_line(run_cli({"frobnicate"}, ws.dir.path()), 2, "Usage");
  check_error_line(run_cli({"vote", s(ws.dir / "missing.png"), "-o", s(ws.dir / "o.png")}, ws.dir.path()), 3,
                   "IoFailure");
  io::write_label_png(LabelMap(2, 2, 0), ws.dir / "a.png");
  io::write_label_png(LabelMap(3, 2, 0), ws.dir / "b.png");
  check_error_line(run_cli({"vote", s(ws.dir / "a.png"), s(ws.dir / "b.png"), "-o", s(ws.dir / "o.png")}, ws.dir.path()),
                   3, "DimMismatch");
  check_error_line(run_cli({"vote", s(ws.dir / "a.png"), "-o", s(ws.dir / "o.png"), "--priority", "zz"}, ws.dir.path()),
                   3, "PriorityMismatch");
  check_error_line(run_cli({"tile", "--image", s(ws.dir / "images" / "scene0.png"), "--cmd",
                            std::string(SEGFUSE_STUB_PATH) + " --classes 2 --fault crash", "--classes", "2",
                            "--window", "8", "-o", s(ws.dir / "t.sfpm")},
                           ws.dir.path()),
                   4, "PredictorCrash");
  check_error_line(run_cli({"tile", "--image", s(ws.dir / "images" / "scene0.png"), "--registry", s(ws.registry),
                            "--predictor", "nope", "--window", "8", "-o", s(ws.dir / "t.sfpm")},
                           ws.dir.path()),
                   2, "Usage");
  check_error_line(run_cli({"convert", s(ws.dir / "a.png"), s(ws.dir / "a.txt")}, ws.dir.path()), 2, "Usage");
}

TEST_CASE("augment and pipeline are byte-identical across runs and thread counts") {
  Workspace ws(4);
  for (const char* threads : {"1", "4"}) {
    require_ok(run_cli({"--threads", threads, "augment", "--manifest", s(ws.manifest), "--recipe", s(ws.recipe), "--out",
                        s(ws.dir / (std::string("aug") + threads))},
                       ws.dir.path()));
  }
  auto a1 = tree_bytes(ws.dir / "aug1");
  CHECK(a1.size() == 9);
  CHECK(a1 == tree_bytes(ws.dir / "aug4"));
  SceneManifest out = parse_manifest(ws.dir / "aug1" / "manifest.json");
  CHECK(out.scenes[0].id == "scene0_aug");
  CHECK(io::read_label_png(out.scenes[0].gt).width() == 32);

  std::map<std::string, std::vector<std::uint8_t>> first;
  for (const char* threads : {"1", "3", "1"}) {
    std::filesystem::remove_all(ws.dir / "pipeline_out");
    require_ok(run_cli({"--threads", threads, "pipeline", "--config", s(ws.pipeline_config)}, ws.dir.path()));
    auto tree = tree_bytes(ws.dir / "pipeline_out");
    if (first.empty()) {
      first = tree;
      CHECK(first.count("scene3.png") == 1);
      CHECK(first.count("sources/m2/scene1.png") == 1);
      CHECK(first.count("report.json") == 1);
    } else {
      CHECK(tree == first);
    }
  }
}
