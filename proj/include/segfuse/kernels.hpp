// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops. Every ISA variant produces bit-identical results to
// the scalar reference; tests/test_kernels.cpp holds them to that.

#pragma once

#include <cstddef>
#include <vector>

#include "segfuse/core.hpp"

namespace segfuse::kernels {

enum class Isa { Scalar, Avx2 };

struct Table {
  Isa isa;
  const char* name;

  // votes[0..k) are label rows of n pixels, already in priority order. Per pixel the
  // first voter whose label count is strictly greater than all earlier ones wins.
  // With abstain set, voters holding `ignore` count zero; a pixel with no non-zero
  // count gets `ignore`.
  void (*vote)(const Label* const* votes, std::size_t k, std::size_t n, Label ignore, bool abstain, Label* out);

  // acc[i] += w * x[i], multiply then add, no contraction.
  void (*accumulate)(float* acc, const float* x, float w, std::size_t n);

  // v[i] /= d[i]
  void (*divide)(float* v, const float* d, std::size_t n);

  // planes holds c planes of n floats; out[i] = smallest class index of the maximum.
  void (*argmax)(const float* planes, std::size_t c, std::size_t n, Label* out);
};

const Table& scalar() noexcept;

/// AVX2 table when compiled in and supported by this CPU, else nullptr.
const Table* avx2() noexcept;

/// Every table usable on this machine, scalar first.
std::vector<const Table*> available();

/// The table used by the library. Picks the widest supported ISA unless the
/// SEGFUSE_ISA environment variable names another ("scalar", "avx2").
const Table& active() noexcept;

}  // namespace segfuse::kernels
