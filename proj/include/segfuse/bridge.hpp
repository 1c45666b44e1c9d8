// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// External prediction producers.
//
// Request (SFIM, little-endian): "SFIM" | u16 version = 1 | u32 W | u32 H | 3*W*H RGB bytes.
// Response: one SFPM probability raster (see io.hpp).
//
// per-image mode runs the command once per image: request on stdin, response on
// stdout, stdin closed after the request. persistent mode keeps one process and
// exchanges requests and responses back-to-back on the same pipes.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "segfuse/core.hpp"
#include "segfuse/fusion.hpp"

namespace segfuse {

class Subprocess;

enum class IoMode { PerImage, Persistent };

struct PredictorSpec {
  std::string id;
  std::vector<std::string> command;
  IoMode io_mode = IoMode::PerImage;
  bool parallel_safe = false;
  int expected_classes = 1;
  std::chrono::milliseconds timeout{0};  // 0 means default_predictor_timeout()
};

/// SEGFUSE_PREDICTOR_TIMEOUT_MS when set, else 120 s.
std::chrono::milliseconds default_predictor_timeout();

inline constexpr std::uint16_t kSfimVersion = 1;
inline constexpr std::size_t kSfimHeaderSize = 14;

std::vector<std::uint8_t> encode_sfim(const ImageRGB& image);

struct SfimHeader {
  std::uint32_t width;
  std::uint32_t height;
  std::size_t payload_bytes() const noexcept { return static_cast<std::size_t>(width) * height * 3; }
};

/// Throws ProtocolError on bad magic/version, TruncatedFile on short input.
SfimHeader decode_sfim_header(std::span<const std::uint8_t> bytes);
ImageRGB decode_sfim(std::span<const std::uint8_t> bytes);

/// Tolerance on per-pixel sums accepted from external producers before renormalizing.
inline constexpr float kResponseSumTolerance = 1e-3f;

/// Checks class count (ClassMismatch), dims and values (ProtocolError), then
/// renormalizes every pixel to sum to one.
ProbMap validate_response(ProbMap prob, int expected_classes, int width, int height);

/// Parses a raw response buffer; truncated payloads map to PredictorCrash.
ProbMap parse_response(std::span<const std::uint8_t> bytes, const PredictorSpec& spec, int width, int height);

/// One-shot call: spawns the command, sends one request and validates the response.
ProbMap invoke_predictor(const PredictorSpec& spec, const ImageRGB& image);

/// A Predictor backed by an external command. In persistent mode it keeps a pool of
/// live processes (one per concurrent caller when parallel_safe, one otherwise).
class ExternalPredictor final : public Predictor {
 public:
  explicit ExternalPredictor(PredictorSpec spec);
  ~ExternalPredictor() override;

  ProbMap predict(const ImageRGB& image) const override;
  bool parallel_safe() const override { return spec_.parallel_safe; }
  const PredictorSpec& spec() const noexcept { return spec_; }

 private:
  ProbMap predict_persistent(const ImageRGB& image) const;

  PredictorSpec spec_;
  mutable std::mutex serial_;  // held for the whole call when !parallel_safe
  mutable std::mutex pool_mutex_;
  mutable std::vector<std::unique_ptr<Subprocess>> idle_;
};

/// Registry JSON:
///   { "format": 1, "predictors": [ { "id": "a", "command": ["./stub", "--mode", "uniform"],
///     "io_mode": "per-image" | "persistent", "parallel_safe": false, "classes": 4,
///     "timeout_ms": 30000 } ] }
/// A command path containing '/' that is relative resolves against the registry's directory.
std::vector<PredictorSpec> load_registry(const std::filesystem::path& path);

const PredictorSpec& find_predictor(const std::vector<PredictorSpec>& registry, const std::string& id);

}  // namespace segfuse
