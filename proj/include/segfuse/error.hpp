// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace segfuse {

enum class Errc {
  EmptyInput,
  DimMismatch,
  PriorityMismatch,
  ZeroWeight,
  InvalidGeometry,
  CoverageGap,
  PredictorError,
  ClassOutOfRange,
  NoValidPixels,
  MissingPrediction,
  UnreadableGroundTruth,
  InvalidParams,
  InvalidSpec,
  InvalidRange,
  ProtocolError,
  PredictorCrash,
  ClassMismatch,
  Timeout,
  BadFormat,
  IoFailure,
  BadMagic,
  BadVersion,
  TruncatedFile,
  SchemaError,
  DuplicateSceneId,
  Usage,
};

/// Stable machine-readable name, e.g. "DimMismatch".
const char* errc_name(Errc code) noexcept;

/// Process exit code for a failure of this kind: 2 usage, 3 data, 4 predictor.
int exit_code_for(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace segfuse
