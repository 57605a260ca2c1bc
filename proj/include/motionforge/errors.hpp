// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace motionforge {

enum class ErrorCode {
  DegenerateGeometry,
  BehindCamera,
  InvalidDepth,
  DimensionMismatch,
  UnreadableFile,
  OverlappingMasks,
  EmptyMask,
  FrameMismatch,
  NonIdentityFirstExtrinsic,
  EmptyUnit,
  MissingUnitScript,
  KeyframeOutOfRange,
  InvalidScript,
  FrameOutOfRange,
  CorruptHeader,
  TruncatedPayload,
  ShapeMismatch,
  NoValidSamples,
  InvalidConfig,
  InvalidManifest,
};

std::string_view to_string(ErrorCode code);

/// True for failures caused by the filesystem or a malformed byte stream
/// (the CLI maps these to exit code 2).
bool is_io_error(ErrorCode code);

struct PixelRef {
  int u = 0;
  int v = 0;
};

/// Every failure raised by the library. The message is prefixed with the code
/// name so that callers that only see `what()` still get a stable token.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  std::optional<int> frame;
  std::optional<int> unit;
  std::optional<PixelRef> pixel;
  /// Pipeline stage that raised the error, empty outside the pipeline.
  std::string stage;

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace motionforge
