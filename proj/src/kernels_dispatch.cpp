// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string_view>

#include "segfuse/kernels.hpp"

namespace segfuse::kernels {

#if defined(SEGFUSE_HAVE_AVX2)
const Table& avx2_table() noexcept;
#endif

const Table* avx2() noexcept {
#if defined(SEGFUSE_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

std::vector<const Table*> available() {
  std::vector<const Table*> tables{&scalar()};
  if (const Table* t = avx2()) tables.push_back(t);
  return tables;
}

const Table& active() noexcept {
  static const Table* chosen = [] {
    const char* env = std::getenv("SEGFUSE_ISA");
    std::string_view want = env != nullptr ? env : "";
    if (want == "scalar") return &scalar();
    if (const Table* t = avx2()) return t;
    return &scalar();
  }();
  return *chosen;
}

}  // namespace segfuse::kernels
