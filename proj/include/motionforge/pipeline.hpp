// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/compose.hpp"
#include "motionforge/image_io.hpp"
#include "motionforge/scene.hpp"
#include "motionforge/script.hpp"
#include "motionforge/trajectory.hpp"

namespace motionforge {

enum class MotionFamily { Static, Translation, Rotation, Screw, RigidSinusoidal };
enum class CameraFamily { Static, Orbit, Dolly, Pan };

std::string_view to_string(MotionFamily f);
std::string_view to_string(CameraFamily f);
MotionFamily motion_family_from_string(std::string_view s);
CameraFamily camera_family_from_string(std::string_view s);

struct UnitConfig {
  MotionFamily family = MotionFamily::Translation;
  /// Per-frame translation; drawn from the seed when absent.
  std::optional<Eigen::Vector3d> velocity;
  /// Per-frame rotation (axis-angle) about the unit centroid; drawn when absent.
  std::optional<Eigen::Vector3d> angular_velocity;
};

struct SyntheticConfig {
  int width = 64;
  int height = 48;
  int frames = 24;
  std::vector<UnitConfig> units{UnitConfig{MotionFamily::Translation, {}, {}},
                                 UnitConfig{MotionFamily::RigidSinusoidal, {}, {}}};
  /// Extra segments that never move; the pipeline must leave them in the borderland.
  int static_segments = 1;
  CameraFamily camera = CameraFamily::Static;
  double camera_step = 0.01;      // radians or world units per frame
  double unit_step = 0.01;        // magnitude of drawn unit velocities
  double residual_amplitude = 0.004;
  /// Pixels within this many pixels of the image border get no depth.
  int invalid_border = 0;
  double noise_sigma = 0.0;       // Gaussian noise on observed camera tracks
  double outlier_fraction = 0.0;  // share of static points with gross errors
  double outlier_magnitude = 0.5;
  double dropout_fraction = 0.0;  // share of samples (t >= 1) marked invalid
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
};

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticConfig& config);

/// Ground truth for every oracle: world_traj = rigid + residual exactly and
/// camera_traj = E^-1 world exactly. observed_tracks adds the configured
/// noise, outliers and dropout to camera_traj.
struct SyntheticScene {
  SyntheticConfig config;
  SceneDomain scene;
  Image image;
  std::vector<Mask> unit_masks;
  std::vector<std::vector<std::uint32_t>> unit_points;
  /// unit masks first, then the static segments.
  std::vector<Mask> segments;
  std::vector<RigidTransform> true_extrinsics;
  std::vector<std::vector<RigidTransform>> true_unit_rigids;  // [unit][t]
  std::vector<std::vector<Point3>> true_residuals;            // [unit][t * n + k], world frame
  std::vector<std::uint32_t> static_points;                   // every valid point outside the units
  TrajectoryField world_traj;
  TrajectoryField camera_traj;
  TrajectoryField observed_tracks;
  std::uint64_t seed = 0;
};

SyntheticScene generate_synthetic(const SyntheticConfig& config);

/// Writes image.png, depth.dpth, unit/segment masks, scene.json, script.json
/// (the ground-truth motion as a script), tracks_camera.trck,
/// tracks_world.trck, tracks_observed.trck and truth.json.
void write_synthetic(const SyntheticScene& synth, const std::filesystem::path& dir);

/// A pixel is dynamic iff max_t |D(t, x) - x| > threshold_ratio * median
/// first-frame depth. `world` must hold one point per pixel.
Mask dynamic_mask(const TrajectoryField& world, int width, int height, double threshold_ratio = 0.02,
                  Exec exec = Exec::Parallel);

/// Fair coin per unit from `seed`: drag or brush.
std::vector<Category> assign_categories(std::size_t count, std::uint64_t seed);

struct PipelineOptions {
  double threshold_ratio = 0.02;
  TrimOptions trim{};
  /// Robust first pass over all tracked points, used only to build the
  /// dynamic mask before the borderland is known.
  TrimOptions preliminary_trim{6, 0.5};
  Exec exec = Exec::Parallel;
};

struct UnitProvenance {
  int id = 0;
  Category category = Category::Borderland;
  std::size_t pixels = 0;
  std::optional<std::size_t> segment;  // index into the input segments
  double mean_fit_residual = 0.0;
};

struct Provenance {
  std::uint64_t seed = 0;
  double threshold_ratio = 0.0;
  std::size_t dynamic_pixels = 0;
  std::vector<UnitProvenance> units;
  std::vector<RigidTransform> extrinsics;
  std::vector<std::vector<double>> strengths;
};

nlohmann::json to_json(const Provenance& provenance);

struct TrainingSample {
  ControlTensor tensor;
  UnitPartition partition;
  std::vector<UnitMotion> motions;
  std::vector<RigidTransform> extrinsics;
  Mask dynamic;
  Provenance provenance;
};

/// dynamic mask -> unit selection -> coin categories -> extrinsics from the
/// borderland -> world trajectories -> per-unit decomposition -> tensor.
/// Errors carry the failing stage in Error::stage.
TrainingSample build_training_sample(const SceneDomain& scene, std::span<const Mask> segments,
                                     const TrajectoryField& camera_traj, std::uint64_t seed,
                                     const PipelineOptions& options = {});

}  // namespace motionforge
