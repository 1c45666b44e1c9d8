// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/kernels.hpp"

namespace segfuse::kernels {
namespace {

void vote_scalar(const Label* const* votes, std::size_t k, std::size_t n, Label ignore, bool abstain, Label* out) {
  for (std::size_t i = 0; i < n; ++i) {
    Label best = ignore;
    std::size_t best_count = 0;
    for (std::size_t a = 0; a < k; ++a) {
      Label candidate = votes[a][i];
      if (abstain && candidate == ignore) continue;
      std::size_t count = 0;
      for (std::size_t b = 0; b < k; ++b) count += votes[b][i] == candidate ? 1 : 0;
      if (count > best_count) {
        best_count = count;
        best = candidate;
      }
    }
    out[i] = best;
  }
}

void accumulate_scalar(float* acc, const float* x, float w, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    float term = w * x[i];
    acc[i] = acc[i] + term;
  }
}

void divide_scalar(float* v, const float* d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = v[i] / d[i];
}

void argmax_scalar(const float* planes, std::size_t c, std::size_t n, Label* out) {
  for (std::size_t i = 0; i < n; ++i) {
    float best = planes[i];
    Label index = 0;
    for (std::size_t k = 1; k < c; ++k) {
      float v = planes[k * n + i];
      if (v > best) {
        best = v;
        index = static_cast<Label>(k);
      }
    }
    out[i] = index;
  }
}

}  // namespace

const Table& scalar() noexcept {
  static const Table table{Isa::Scalar, "scalar", vote_scalar, accumulate_scalar, divide_scalar, argmax_scalar};
  return table;
}

}  // namespace segfuse::kernels
