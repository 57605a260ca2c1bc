// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "motionforge/exec.hpp"
#include "motionforge/geometry.hpp"
#include "motionforge/scene.hpp"

namespace motionforge {

enum class TrajectoryFrame : std::uint8_t { Camera = 0, World = 1 };

/// T x N point trajectories. Point i at frame 0 is its first-frame position;
/// a point with valid[0][i] == false is untracked at every frame.
struct TrajectoryField {
  TrajectoryFrame frame = TrajectoryFrame::World;
  std::size_t frame_count = 0;
  std::size_t point_count = 0;
  std::vector<Point3> positions;     // frame-major, T * N
  std::vector<std::uint8_t> valid;   // frame-major, T * N

  static TrajectoryField make(TrajectoryFrame frame, std::size_t frames, std::size_t points);

  std::size_t index(std::size_t t, std::size_t i) const noexcept { return t * point_count + i; }
  Point3& at(std::size_t t, std::size_t i) { return positions[index(t, i)]; }
  const Point3& at(std::size_t t, std::size_t i) const { return positions[index(t, i)]; }
  bool is_valid(std::size_t t, std::size_t i) const { return valid[index(t, i)] != 0; }

  std::span<const Point3> frame_positions(std::size_t t) const {
    return std::span<const Point3>(positions).subspan(t * point_count, point_count);
  }

  /// A field that starts on the scene grid and never moves (N = H * W).
  static TrajectoryField static_scene(const SceneDomain& scene, std::size_t frames,
                                      TrajectoryFrame frame = TrajectoryFrame::World);
};

/// Uniformly scales every position (used to follow scene normalization).
TrajectoryField scaled(const TrajectoryField& field, double scale);

/// Per-unit decomposition D(t, x) = rigid[t](x) + residual[t][k].
struct UnitMotion {
  Category category = Category::Borderland;
  std::vector<std::uint32_t> indices;   // point indices of the unit
  std::vector<RigidTransform> rigid;    // length T, rigid[0] = identity
  std::vector<double> strength;         // length T, strength[0] = 0
  std::vector<Point3> residual;         // T x indices.size(), zero where invalid
  std::vector<std::size_t> empty_strength_frames;

  std::size_t frame_count() const noexcept { return rigid.size(); }
  const Point3& residual_at(std::size_t t, std::size_t k) const { return residual[t * indices.size() + k]; }
};

struct StrengthCurve {
  std::vector<double> values;
  /// Frames (t >= 1) where no point was valid at both t and t - 1; m_t = 0 there.
  std::vector<std::size_t> empty_frames;
};

/// Backward-difference motion strength: m_0 = 0 and, for t >= 1, the mean over
/// points valid at t and t - 1 of |offset[t][i] - offset[t-1][i]|.
/// `offsets` and `valid` are frame-major T x N.
StrengthCurve motion_strength(std::span<const Point3> offsets, std::span<const std::uint8_t> valid,
                              std::size_t frames, std::size_t points, Exec exec = Exec::Parallel);

/// D(t, x) = E_t(F(t, x)). Throws FrameMismatch or NonIdentityFirstExtrinsic.
TrajectoryField to_world(const TrajectoryField& camera, std::span<const RigidTransform> extrinsics,
                         Exec exec = Exec::Parallel);
/// F(t, x) = E_t^-1(D(t, x)).
TrajectoryField to_camera(const TrajectoryField& world, std::span<const RigidTransform> extrinsics,
                          Exec exec = Exec::Parallel);

struct TrimOptions {
  int rounds = 3;
  double fraction = 0.1;
};

/// Camera poses from the camera-frame tracks of world-static points. Each
/// frame fits Q_t: x -> F(t, x) with `rounds` passes that zero the weight of the
/// `fraction` largest residuals, and returns E_t = Q_t^-1.
/// Throws DegenerateGeometry tagged with the failing frame.
std::vector<RigidTransform> solve_extrinsics(const TrajectoryField& camera,
                                             std::span<const std::uint32_t> static_points,
                                             TrimOptions trim = {}, Exec exec = Exec::Parallel);

/// Splits a world-frame unit trajectory into rigid and residual terms per the
/// unit category: borderland and brush keep an identity rigid term, drag
/// fits the SE(3) transform per frame. Borderland strength is zero; brush and
/// drag strength is motion_strength of the residual.
UnitMotion decompose_unit(const TrajectoryField& world, std::span<const std::uint32_t> unit_points,
                          Category category, Exec exec = Exec::Parallel);

// TRCK files: "TRCK", u32 version = 1, u32 T, u32 N, u8 frame flag
// (0 = camera, 1 = world), T*N*3 float32 positions, T*N u8 validity.
std::vector<std::uint8_t> encode_tracks(const TrajectoryField& field);
TrajectoryField decode_tracks(std::span<const std::uint8_t> bytes);
void write_tracks(const std::filesystem::path& path, const TrajectoryField& field);
TrajectoryField read_tracks(const std::filesystem::path& path);

}  // namespace motionforge
