// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/exec.hpp"
#include "motionforge/geometry.hpp"
#include "motionforge/grid.hpp"
#include "motionforge/trajectory.hpp"

namespace motionforge {

/// T x N pixel tracks, frame-major.
struct Tracks2D {
  std::size_t frames = 0;
  std::size_t points = 0;
  std::vector<Pixel> positions;
  std::vector<std::uint8_t> valid;

  static Tracks2D make(std::size_t frames, std::size_t points);
  std::size_t index(std::size_t t, std::size_t i) const noexcept { return t * points + i; }
  Pixel& at(std::size_t t, std::size_t i) { return positions[index(t, i)]; }
  const Pixel& at(std::size_t t, std::size_t i) const { return positions[index(t, i)]; }
  bool is_valid(std::size_t t, std::size_t i) const { return valid[index(t, i)] != 0; }
};

/// Camera-frame 3D tracks projected with `k`; samples behind the camera
/// become invalid. Without intrinsics, (x, y) is taken as the pixel position.
Tracks2D tracks_to_2d(const TrajectoryField& field, const std::optional<CameraIntrinsics>& k);

/// Mean over samples valid in both of |gen - ref|. Throws ShapeMismatch or NoValidSamples.
double objmc(const Tracks2D& generated, const Tracks2D& reference);
std::vector<double> objmc_per_frame(const Tracks2D& generated, const Tracks2D& reference);

/// Mean over t >= 1 and points valid at t and t - 1 (and inside `mask` when
/// given, one entry per point) of |p_t - p_{t-1}|.
double msc(const Tracks2D& tracks, const Mask* mask = nullptr);
std::vector<double> msc_per_frame(const Tracks2D& tracks, const Mask* mask = nullptr);

/// Points whose max displacement from frame 0 exceeds `threshold_px`.
Mask moving_set(const Tracks2D& tracks, int width, int height, double threshold_px = 1.0);
/// IoU of the moving set and `mask`; 1 when both are empty. Throws DimensionMismatch.
double motion_iou(const Tracks2D& tracks, const Mask& mask, double threshold_px = 1.0);

struct EvalReport {
  double objmc = 0.0;
  double msc = 0.0;
  std::optional<double> iou;
  std::vector<double> objmc_per_frame;
  std::vector<double> msc_per_frame;
  double threshold_px = 1.0;
};

struct EvalInputs {
  const Tracks2D* generated = nullptr;
  const Tracks2D* reference = nullptr;
  const Mask* mask = nullptr;  // restricts msc and enables iou
  int width = 0;
  int height = 0;
  double threshold_px = 1.0;
};

EvalReport evaluate(const EvalInputs& in);
/// One report per sample, evaluated in parallel.
std::vector<EvalReport> evaluate_batch(std::span<const EvalInputs> samples, Exec exec = Exec::Parallel);

nlohmann::json to_json(const EvalReport& report);
/// frame,objmc,msc rows.
std::string to_csv(const EvalReport& report);

}  // namespace motionforge
