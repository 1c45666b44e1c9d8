// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/error.hpp"

namespace segfuse {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::PriorityMismatch: return "PriorityMismatch";
    case Errc::ZeroWeight: return "ZeroWeight";
    case Errc::InvalidGeometry: return "InvalidGeometry";
    case Errc::CoverageGap: return "CoverageGap";
    case Errc::PredictorError: return "PredictorError";
    case Errc::ClassOutOfRange: return "ClassOutOfRange";
    case Errc::NoValidPixels: return "NoValidPixels";
    case Errc::MissingPrediction: return "MissingPrediction";
    case Errc::UnreadableGroundTruth: return "UnreadableGroundTruth";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::PredictorCrash: return "PredictorCrash";
    case Errc::ClassMismatch: return "ClassMismatch";
    case Errc::Timeout: return "Timeout";
    case Errc::BadFormat: return "BadFormat";
    case Errc::IoFailure: return "IoFailure";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadVersion: return "BadVersion";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::SchemaError: return "SchemaError";
    case Errc::DuplicateSceneId: return "DuplicateSceneId";
    case Errc::Usage: return "Usage";
  }
  return "Unknown";
}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::Usage:
      return 2;
    case Errc::PredictorError:
    case Errc::ProtocolError:
    case Errc::PredictorCrash:
    case Errc::ClassMismatch:
    case Errc::Timeout:
      return 4;
    default:
      return 3;
  }
}

}  // namespace segfuse
