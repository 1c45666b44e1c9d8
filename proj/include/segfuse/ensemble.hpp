// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "segfuse/core.hpp"

namespace segfuse {

struct VoteConfig {
  // Predictor ids, highest priority first. Empty means input order.
  std::vector<std::string> priority;
  bool treat_ignore_as_abstain = false;
  unsigned threads = 1;
};

/// Per-pixel hard vote. The class with the most votes wins; among tied classes the
/// one voted for by the highest-priority predictor wins.
///
/// `ids[k]` names `preds[k]`. When cfg.priority is non-empty it must be a permutation
/// of `ids`; otherwise `ids` may be empty and input order is the priority.
LabelMap majority_vote(std::span<const LabelMap> preds, std::span<const std::string> ids, const VoteConfig& cfg);

/// Input order is the priority.
LabelMap majority_vote(std::span<const LabelMap> preds, bool treat_ignore_as_abstain = false);

/// Weighted per-element mean; weights are normalized to sum to one and applied in
/// list order. An empty weight list means equal weights.
ProbMap soft_average(std::span<const ProbMap> probs, std::span<const float> weights = {});

}  // namespace segfuse
