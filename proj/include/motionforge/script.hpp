// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/geometry.hpp"
#include "motionforge/scene.hpp"

namespace motionforge {

/// 6-DOF keyframe kept in its authored form (axis-angle radians plus
/// translation) so that JSON round trips are exact.
struct PoseKey {
  int frame = 0;
  Eigen::Vector3d axis_angle = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  RigidTransform transform() const { return RigidTransform::from_axis_angle(axis_angle, translation); }
  friend bool operator==(const PoseKey&, const PoseKey&) = default;
};

struct ScalarKey {
  int frame = 0;
  double value = 0.0;
  friend bool operator==(const ScalarKey&, const ScalarKey&) = default;
};

/// Strength as either one constant (applied from frame 1 on) or keyframes.
struct StrengthSpec {
  std::optional<double> constant;
  std::vector<ScalarKey> keys;
  friend bool operator==(const StrengthSpec&, const StrengthSpec&) = default;
};

struct UnitScript {
  std::optional<std::vector<PoseKey>> rigid;
  std::optional<StrengthSpec> strength;
  friend bool operator==(const UnitScript&, const UnitScript&) = default;
};

/// User-authored motion: camera pose curve plus per-unit rigid and strength
/// curves, keyed by partition label (1..P).
struct MotionScript {
  int frames = 24;
  std::vector<PoseKey> camera;
  std::map<int, UnitScript> units;
  friend bool operator==(const MotionScript&, const MotionScript&) = default;
};

/// Dense per-frame form of a script or of pipeline-fitted motion.
struct MotionPlan {
  int frames = 0;
  std::vector<RigidTransform> camera;                  // E_t, length T
  std::vector<std::vector<RigidTransform>> unit_rigid; // [unit][t]
  std::vector<std::vector<double>> unit_strength;      // [unit][t]
};

/// Samples keyframes on frames 0..T-1. A missing frame-0 key is the identity;
/// a present one must be the identity. Segments slerp/lerp; the last key holds.
/// Throws KeyframeOutOfRange or InvalidScript.
std::vector<RigidTransform> sample_pose_curve(const std::vector<PoseKey>& keys, int frames);
std::vector<double> sample_strength_curve(const StrengthSpec& spec, int frames);

/// Checks the script against the partition and densifies it. Throws
/// MissingUnitScript naming every drag-unit without a rigid curve and every
/// brush-unit without a strength; with `allow_incomplete` those default to
/// identity / zero instead.
MotionPlan plan_from_script(const UnitPartition& partition, const MotionScript& script,
                            bool allow_incomplete = false);

/// Unit ids that plan_from_script would report as missing.
std::vector<int> missing_units(const UnitPartition& partition, const MotionScript& script);

MotionScript script_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MotionScript& script);
PoseKey pose_key_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PoseKey& key);
StrengthSpec strength_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StrengthSpec& spec);

}  // namespace motionforge
