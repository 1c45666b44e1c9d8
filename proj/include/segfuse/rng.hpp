// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace segfuse {

// Portable seeded randomness. The engine is std::mt19937_64, whose output sequence is
// fixed by the standard; all derived draws are computed here rather than through
// <random> distributions, whose algorithms vary between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

  /// Unbiased integer in [lo, hi].
  long long uniform_int(long long lo, long long hi);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Per-item seed: splitmix64(global ^ splitmix64(fnv1a64(item_id) + stream)).
/// `stream` separates independent draws for the same item (e.g. the op index).
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view item_id, std::uint64_t stream = 0) noexcept;

}  // namespace segfuse
