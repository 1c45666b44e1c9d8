// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/stubs.hpp"

#include <algorithm>

#include "segfuse/rng.hpp"

namespace segfuse {

void validate(const StubBehavior& b) {
  if (b.classes < 1) throw Error(Errc::InvalidParams, "stub needs at least one class");
  if (b.mode == StubMode::ConstantClass && (b.class_index < 0 || b.class_index >= b.classes))
    throw Error(Errc::InvalidParams, "constant class must lie in [0, classes)");
  if (b.mode == StubMode::NoisyOracle) {
    if (!b.gt) throw Error(Errc::InvalidParams, "noisy oracle needs a ground truth");
    if (!(b.flip_probability >= 0.0 && b.flip_probability <= 1.0))
      throw Error(Errc::InvalidParams, "flip probability must lie in [0, 1]");
  }
}

LabelMap noisy_oracle_labels(const LabelMap& gt, int classes, double p, std::uint64_t seed) {
  if (classes < 1) throw Error(Errc::InvalidParams, "noisy oracle needs at least one class");
  gt.check_classes(classes);
  Rng rng(seed);
  LabelMap out = gt;
  for (Label& v : out.data()) {
    if (v == gt.ignore_index()) continue;
    if (classes < 2 || !rng.bernoulli(p)) continue;
    auto other = static_cast<Label>(rng.below(static_cast<std::uint64_t>(classes - 1)));
    v = other >= v ? static_cast<Label>(other + 1) : other;
  }
  return out;
}

ProbMap stub_predict(const StubBehavior& b, const ImageRGB& image) {
  validate(b);
  const int c = b.classes;
  switch (b.mode) {
    case StubMode::Uniform:
      return ProbMap(c, image.width(), image.height(), 1.0f / static_cast<float>(c));
    case StubMode::ConstantClass: {
      ProbMap out(c, image.width(), image.height(), 0.0f);
      auto plane = out.plane(b.class_index);
      std::fill(plane.begin(), plane.end(), 1.0f);
      return out;
    }
    case StubMode::NoisyOracle: {
      LabelMap gt = resize_labels(*b.gt, image.width(), image.height());
      LabelMap noisy = noisy_oracle_labels(gt, c, b.flip_probability, b.seed);
      ProbMap out = one_hot(noisy, c);
      const std::size_t n = out.pixels();
      auto data = out.data();
      auto values = noisy.data();
      for (std::size_t i = 0; i < n; ++i) {
        if (values[i] != noisy.ignore_index()) continue;
        for (int k = 0; k < c; ++k) data[static_cast<std::size_t>(k) * n + i] = 1.0f / static_cast<float>(c);
      }
      return out;
    }
  }
  return {};
}

}  // namespace segfuse
