// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/exec.hpp"
#include "motionforge/scene.hpp"
#include "motionforge/script.hpp"
#include "motionforge/trajectory.hpp"

namespace motionforge {

enum Channel : int { kTrajU = 0, kTrajV = 1, kStrength = 2, kPartition = 3, kCategory = 4 };
inline constexpr int kControlChannels = 5;
/// Written to both trajectory channels when a point leaves the image or goes
/// behind the camera, and for pixels without depth.
inline constexpr float kOffFrame = -1.0f;

/// (T, 5, H, W) float32 control signal, T-major.
class ControlTensor {
 public:
  ControlTensor() = default;
  ControlTensor(int frames, int height, int width)
      : frames_(frames), height_(height), width_(width),
        data_(static_cast<std::size_t>(frames) * kControlChannels * height * width, 0.0f) {}

  int frames() const noexcept { return frames_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t frame_size() const noexcept { return plane_size() * kControlChannels; }

  float& at(int t, int c, int v, int u) { return data_[offset(t, c, v, u)]; }
  float at(int t, int c, int v, int u) const { return data_[offset(t, c, v, u)]; }

  std::span<float> frame(int t) { return std::span<float>(data_).subspan(t * frame_size(), frame_size()); }
  std::span<const float> frame(int t) const {
    return std::span<const float>(data_).subspan(t * frame_size(), frame_size());
  }
  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const ControlTensor&, const ControlTensor&) = default;

 private:
  std::size_t offset(int t, int c, int v, int u) const noexcept {
    return ((static_cast<std::size_t>(t) * kControlChannels + c) * height_ + v) * width_ + u;
  }

  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Dense plan from pipeline output: fitted rigid curves and computed strengths
/// per unit (indexed by partition label) plus the solved camera poses.
MotionPlan plan_from_motions(std::span<const UnitMotion> motions, std::span<const RigidTransform> extrinsics);

/// Writes one (5, H, W) frame slice. For a valid pixel of unit p:
///   (u, v)   = project(E_t^-1 R_t^p x), kOffFrame when off-image or behind
///   strength = m_t^p, partition = p, category = c^p.
/// Pixels without depth get kOffFrame trajectories and zeros elsewhere.
void compose_frame(const SceneDomain& scene, const UnitPartition& partition, const MotionPlan& plan, int frame,
                   std::span<float> out, Exec exec = Exec::Parallel);

ControlTensor compose_plan(const SceneDomain& scene, const UnitPartition& partition, const MotionPlan& plan,
                           Exec exec = Exec::Parallel);

/// Authoring path. Throws MissingUnitScript, KeyframeOutOfRange, InvalidScript.
ControlTensor compose(const SceneDomain& scene, const UnitPartition& partition, const MotionScript& script,
                      Exec exec = Exec::Parallel);

/// Training-data path: `motions[p]` is the decomposition of unit p.
ControlTensor compose_from_pipeline(const SceneDomain& scene, const UnitPartition& partition,
                                    std::span<const UnitMotion> motions,
                                    std::span<const RigidTransform> extrinsics, Exec exec = Exec::Parallel);

/// Serial per-pixel reference for compose_frame, kept for kernel tests and the
/// benchmark. Rebuilds E_t^-1 R_t^p for every pixel instead of per unit.
void compose_frame_reference(const SceneDomain& scene, const UnitPartition& partition, const MotionPlan& plan,
                             int frame, std::span<float> out);

/// True when the projected position lies on the image (pixel centers at
/// integer coordinates, so the footprint spans [-0.5, W - 0.5)).
bool on_image(const Pixel& px, int width, int height);

// CTRL files: "CTRL", u32 version = 1, u32 T, u32 C = 5, u32 H, u32 W, then
// float32 (T, C, H, W) little-endian.
std::vector<std::uint8_t> encode_tensor(const ControlTensor& tensor);
ControlTensor decode_tensor(std::span<const std::uint8_t> bytes);
void write_tensor(const ControlTensor& tensor, const std::filesystem::path& path);
ControlTensor read_tensor(const std::filesystem::path& path);

/// JSON sidecar: shape, channel names, unit table, and per-frame counts of
/// off-image trajectory samples.
nlohmann::json tensor_sidecar(const ControlTensor& tensor, const UnitPartition& partition);

}  // namespace motionforge
