// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2. Only reached through kernels::avx2() after a CPU check.

#include <immintrin.h>

#include "segfuse/kernels.hpp"

namespace segfuse::kernels {

const Table& scalar() noexcept;

namespace {

constexpr std::size_t kMaxSimdVoters = 64;

void vote_avx2(const Label* const* votes, std::size_t k, std::size_t n, Label ignore, bool abstain, Label* out) {
  // Counts live in 16-bit lanes; beyond kMaxSimdVoters fall back to the reference.
  if (k > kMaxSimdVoters) {
    scalar().vote(votes, k, n, ignore, abstain, out);
    return;
  }
  __m256i lanes[kMaxSimdVoters];
  const __m256i ign = _mm256_set1_epi16(static_cast<short>(ignore));
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    for (std::size_t a = 0; a < k; ++a)
      lanes[a] = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(votes[a] + i));

    __m256i best = ign;
    __m256i best_count = _mm256_setzero_si256();
    for (std::size_t a = 0; a < k; ++a) {
      // cmpeq yields -1 per match, so subtracting counts up.
      __m256i count = _mm256_setzero_si256();
      for (std::size_t b = 0; b < k; ++b) count = _mm256_sub_epi16(count, _mm256_cmpeq_epi16(lanes[a], lanes[b]));
      if (abstain) count = _mm256_andnot_si256(_mm256_cmpeq_epi16(lanes[a], ign), count);
      __m256i better = _mm256_cmpgt_epi16(count, best_count);
      best = _mm256_blendv_epi8(best, lanes[a], better);
      best_count = _mm256_max_epi16(best_count, count);
    }
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), best);
  }
  if (i < n) {
    const Label* tail[kMaxSimdVoters];
    for (std::size_t a = 0; a < k; ++a) tail[a] = votes[a] + i;
    scalar().vote(tail, k, n - i, ignore, abstain, out + i);
  }
}

void accumulate_avx2(float* acc, const float* x, float w, std::size_t n) {
  const __m256 wv = _mm256_set1_ps(w);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 term = _mm256_mul_ps(wv, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), term));
  }
  if (i < n) scalar().accumulate(acc + i, x + i, w, n - i);
}

void divide_avx2(float* v, const float* d, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(v + i, _mm256_div_ps(_mm256_loadu_ps(v + i), _mm256_loadu_ps(d + i)));
  if (i < n) scalar().divide(v + i, d + i, n - i);
}

void argmax_avx2(const float* planes, std::size_t c, std::size_t n, Label* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 best = _mm256_loadu_ps(planes + i);
    __m256i index = _mm256_setzero_si256();
    for (std::size_t k = 1; k < c; ++k) {
      __m256 v = _mm256_loadu_ps(planes + k * n + i);
      __m256 gt = _mm256_cmp_ps(v, best, _CMP_GT_OQ);
      best = _mm256_blendv_ps(best, v, gt);
      index = _mm256_blendv_epi8(index, _mm256_set1_epi32(static_cast<int>(k)), _mm256_castps_si256(gt));
    }
    // 8 x u32 -> 8 x u16; packus works per 128-bit lane, so gather the low halves.
    __m256i packed = _mm256_permute4x64_epi64(_mm256_packus_epi32(index, index), 0x08);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), _mm256_castsi256_si128(packed));
  }
  if (i < n) {
    // The tail still reads planes with stride n, so walk it pixel by pixel.
    for (; i < n; ++i) {
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
}

}  // namespace

const Table& avx2_table() noexcept {
  static const Table table{Isa::Avx2, "avx2", vote_avx2, accumulate_avx2, divide_avx2, argmax_avx2};
  return table;
}

}  // namespace segfuse::kernels
