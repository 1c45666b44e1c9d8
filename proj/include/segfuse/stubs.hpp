// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic reference predictors. tools/segfuse_stub wraps these behind the
// SFIM/SFPM protocol; tests use them in-process as well.

#pragma once

#include <cstdint>
#include <optional>

#include "segfuse/core.hpp"

namespace segfuse {

enum class StubMode { Uniform, ConstantClass, NoisyOracle };

struct StubBehavior {
  StubMode mode = StubMode::Uniform;
  int classes = 1;
  int class_index = 0;          // ConstantClass
  std::optional<LabelMap> gt;   // NoisyOracle
  double flip_probability = 0;  // NoisyOracle
  std::uint64_t seed = 0;       // NoisyOracle
};

/// Throws InvalidParams unless classes >= 1, class_index < classes, p in [0, 1] and
/// a ground truth is present for NoisyOracle.
void validate(const StubBehavior& behavior);

/// Each non-ignore pixel keeps its class, or with probability p is replaced by a
/// uniformly drawn different class. Pixels are visited in row-major order; each
/// draws one uniform for the coin and, when flipped, one more for the class.
LabelMap noisy_oracle_labels(const LabelMap& gt, int classes, double p, std::uint64_t seed);

/// Uniform: 1/C everywhere. ConstantClass: one-hot at class_index. NoisyOracle:
/// one-hot of noisy_oracle_labels(gt resized nearest to the image), uniform at
/// ignore pixels.
ProbMap stub_predict(const StubBehavior& behavior, const ImageRGB& image);

}  // namespace segfuse
