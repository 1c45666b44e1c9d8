// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "segfuse/kernels.hpp"
#include "segfuse/parallel.hpp"

namespace segfuse {
namespace {

constexpr std::size_t kRowsPerChunk = 16;

std::vector<std::size_t> priority_order(std::size_t k, std::span<const std::string> ids, const VoteConfig& cfg) {
  std::vector<std::size_t> order(k);
  if (cfg.priority.empty()) {
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    return order;
  }
  if (cfg.priority.size() != k)
    throw Error(Errc::PriorityMismatch, "priority lists " + std::to_string(cfg.priority.size()) + " ids for " +
                                            std::to_string(k) + " predictions");
  if (ids.size() != k) throw Error(Errc::PriorityMismatch, "every prediction needs an id when priority is given");
  std::vector<bool> used(k, false);
  for (std::size_t p = 0; p < k; ++p) {
    auto it = std::find(ids.begin(), ids.end(), cfg.priority[p]);
    if (it == ids.end()) throw Error(Errc::PriorityMismatch, "priority names unknown predictor '" + cfg.priority[p] + "'");
    std::size_t idx = static_cast<std::size_t>(it - ids.begin());
    if (used[idx]) throw Error(Errc::PriorityMismatch, "priority lists '" + cfg.priority[p] + "' twice");
    if (std::find(it + 1, ids.end(), cfg.priority[p]) != ids.end())
      throw Error(Errc::PriorityMismatch, "predictor id '" + cfg.priority[p] + "' is not unique");
    used[idx] = true;
    order[p] = idx;
  }
  return order;
}

}  // namespace

LabelMap majority_vote(std::span<const LabelMap> preds, std::span<const std::string> ids, const VoteConfig& cfg) {
  if (preds.empty()) throw Error(Errc::EmptyInput, "majority vote needs at least one prediction");
  const LabelMap& first = preds.front();
  if (first.empty()) throw Error(Errc::EmptyInput, "majority vote over empty label maps");
  for (const LabelMap& p : preds) {
    if (p.width() != first.width() || p.height() != first.height())
      throw Error(Errc::DimMismatch, "prediction dims differ");
    if (p.ignore_index() != first.ignore_index()) throw Error(Errc::DimMismatch, "prediction ignore indices differ");
  }
  const auto order = priority_order(preds.size(), ids, cfg);

  LabelMap out(first.width(), first.height(), 0, first.ignore_index());
  const auto& kern = kernels::active();
  const std::size_t width = static_cast<std::size_t>(first.width());
  const std::size_t rows = static_cast<std::size_t>(first.height());
  const std::size_t chunks = (rows + kRowsPerChunk - 1) / kRowsPerChunk;

  parallel_for(chunks, cfg.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<const Label*> rowptr(order.size());
    for (std::size_t chunk = begin; chunk < end; ++chunk) {
      std::size_t y0 = chunk * kRowsPerChunk;
      std::size_t y1 = std::min(rows, y0 + kRowsPerChunk);
      std::size_t offset = y0 * width;
      for (std::size_t p = 0; p < order.size(); ++p) rowptr[p] = preds[order[p]].data().data() + offset;
      kern.vote(rowptr.data(), rowptr.size(), (y1 - y0) * width, first.ignore_index(), cfg.treat_ignore_as_abstain,
                out.data().data() + offset);
    }
  });
  return out;
}

LabelMap majority_vote(std::span<const LabelMap> preds, bool treat_ignore_as_abstain) {
  VoteConfig cfg;
  cfg.treat_ignore_as_abstain = treat_ignore_as_abstain;
  return majority_vote(preds, {}, cfg);
}

ProbMap soft_average(std::span<const ProbMap> probs, std::span<const float> weights) {
  if (probs.empty()) throw Error(Errc::EmptyInput, "soft average needs at least one map");
  const ProbMap& first = probs.front();
  if (first.empty()) throw Error(Errc::EmptyInput, "soft average over empty maps");
  for (const ProbMap& p : probs)
    if (!p.same_shape(first)) throw Error(Errc::DimMismatch, "probability map shapes differ");

  std::vector<float> w(probs.size(), 1.0f);
  if (!weights.empty()) {
    if (weights.size() != probs.size()) throw Error(Errc::DimMismatch, "weight count differs from map count");
    w.assign(weights.begin(), weights.end());
  }
  double total = 0.0;
  for (float v : w) {
    if (!std::isfinite(v) || v < 0.0f) throw Error(Errc::ZeroWeight, "weights must be finite and non-negative");
    total += v;
  }
  if (!(total > 0.0)) throw Error(Errc::ZeroWeight, "weights sum to zero");
  for (float& v : w) v = static_cast<float>(v / total);

  ProbMap out(first.num_classes(), first.width(), first.height(), 0.0f);
  const auto& kern = kernels::active();
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (w[k] == 0.0f) continue;
    kern.accumulate(out.data().data(), probs[k].data().data(), w[k], out.data().size());
  }
  return out;
}

}  // namespace segfuse
