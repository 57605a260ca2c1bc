// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/errors.hpp"

namespace motionforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::OverlappingMasks: return "OverlappingMasks";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::NonIdentityFirstExtrinsic: return "NonIdentityFirstExtrinsic";
    case ErrorCode::EmptyUnit: return "EmptyUnit";
    case ErrorCode::MissingUnitScript: return "MissingUnitScript";
    case ErrorCode::KeyframeOutOfRange: return "KeyframeOutOfRange";
    case ErrorCode::InvalidScript: return "InvalidScript";
    case ErrorCode::FrameOutOfRange: return "FrameOutOfRange";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoValidSamples: return "NoValidSamples";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
  }
  return "Unknown";
}

bool is_io_error(ErrorCode code) {
  return code == ErrorCode::UnreadableFile || code == ErrorCode::CorruptHeader ||
         code == ErrorCode::TruncatedPayload;
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

}  // namespace motionforge
