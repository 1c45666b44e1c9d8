// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Generators and scratch-directory helpers shared by the test suites.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "segfuse/core.hpp"

namespace segfuse::test {

// Draws go through raw engine output so sequences do not depend on the standard
// library's distribution implementations.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  // Uniform integer in [lo, hi].
  int range(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool coin(double p = 0.5) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

inline LabelMap random_labels(Gen& g, int w, int h, int classes, double ignore_rate = 0.0,
                              Label ignore = kDefaultIgnoreIndex) {
  LabelMap m(w, h, 0, ignore);
  for (Label& v : m.data()) v = g.coin(ignore_rate) ? ignore : static_cast<Label>(g.range(0, classes - 1));
  return m;
}

// Each pixel's class column sums to 1 in float arithmetic up to rounding.
inline ProbMap random_prob(Gen& g, int classes, int w, int h) {
  ProbMap p(classes, w, h);
  const std::size_t n = p.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    std::vector<double> v(static_cast<std::size_t>(classes));
    for (double& x : v) sum += (x = 0.05 + g.unit());
    for (int c = 0; c < classes; ++c) p.data()[static_cast<std::size_t>(c) * n + i] = static_cast<float>(v[c] / sum);
  }
  return p;
}

inline ImageRGB random_image(Gen& g, int w, int h) {
  ImageRGB img(w, h);
  for (auto& b : img.data()) b = static_cast<std::uint8_t>(g.range(0, 255));
  return img;
}

inline double max_sum_error(const ProbMap& p) {
  double worst = 0.0;
  const std::size_t n = p.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < p.num_classes(); ++c) s += p.data()[static_cast<std::size_t>(c) * n + i];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("segfuse_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::vector<std::uint8_t> out;
  if (FILE* f = std::fopen(p.c_str(), "rb")) {
    std::uint8_t buf[65536];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof(buf), f)) > 0;) out.insert(out.end(), buf, buf + n);
    std::fclose(f);
  }
  return out;
}

}  // namespace segfuse::test
