// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "motionforge/compose.hpp"
#include "motionforge/geometry.hpp"
#include "motionforge/image_io.hpp"
#include "motionforge/pipeline.hpp"
#include "motionforge/scene.hpp"
#include "motionforge/trajectory.hpp"

namespace fixtures {

using namespace motionforge;
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Eigen::Vector3d random_vector(Rng& rng, double scale = 1.0) {
  return Eigen::Vector3d(uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale));
}

inline RigidTransform random_rigid(Rng& rng, double max_angle = std::numbers::pi, double max_shift = 2.0) {
  Eigen::Vector3d axis = random_vector(rng);
  while (axis.norm() < 1e-3) axis = random_vector(rng);
  return RigidTransform::from_axis_angle(axis.normalized() * uniform(rng, 0.0, max_angle), random_vector(rng, max_shift));
}

inline std::vector<Point3> random_cloud(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<Point3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(random_vector(rng, scale));
  return pts;
}

/// Plane at `depth` with an optional band of invalid pixels around the border.
inline SceneDomain flat_scene(int w, int h, double depth = 1.0, int border = 0,
                              std::optional<CameraIntrinsics> k = std::nullopt) {
  Grid<double> d(w, h, depth);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (u < border || v < border || u >= w - border || v >= h - border) d.at(u, v) = std::nan("");
    }
  }
  return SceneDomain::from_depth(k.value_or(CameraIntrinsics::centered(w, h)), d, false);
}

inline Mask rect_mask(int w, int h, int u0, int v0, int rw, int rh) {
  Mask m(w, h);
  for (int v = v0; v < v0 + rh; ++v) {
    for (int u = u0; u < u0 + rw; ++u) m.at(u, v) = 1;
  }
  return m;
}

inline PoseKey pose_key(int frame, const RigidTransform& t) { return PoseKey{frame, t.axis_angle(), t.translation}; }

inline PoseKey translation_key(int frame, const Eigen::Vector3d& t) {
  return PoseKey{frame, Eigen::Vector3d::Zero(), t};
}

/// A scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("motionforge_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline UnitConfig unit(MotionFamily f) { return UnitConfig{f, {}, {}}; }

/// Writes image.png, depth.dpth and scene.json for a flat scene of the
/// given size with centered intrinsics and no units. Returns the manifest path.
inline std::filesystem::path write_flat_scene(const std::filesystem::path& dir, int w, int h, double depth = 1.0) {
  Image image{w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 90)};
  write_png(dir / "image.png", image);
  write_depth(dir / "depth.dpth", Grid<float>(w, h, static_cast<float>(depth)));
  const auto k = CameraIntrinsics::centered(w, h);
  const nlohmann::json manifest{{"image", "image.png"},
                                {"depth", "depth.dpth"},
                                {"intrinsics", {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}}},
                                {"normalize", false}};
  write_file(dir / "scene.json", manifest.dump());
  return dir / "scene.json";
}

/// Noiseless scenes covering every camera and motion family.
inline std::vector<SyntheticConfig> noiseless_fixtures() {
  std::vector<SyntheticConfig> out;
  const std::vector<std::vector<MotionFamily>> unit_sets{
      {MotionFamily::Translation, MotionFamily::RigidSinusoidal},
      {MotionFamily::Rotation, MotionFamily::Screw, MotionFamily::RigidSinusoidal},
      {MotionFamily::Static, MotionFamily::Translation, MotionFamily::Screw},
      {MotionFamily::RigidSinusoidal, MotionFamily::Rotation}};
  std::uint64_t seed = 100;
  for (auto cam : {CameraFamily::Static, CameraFamily::Orbit, CameraFamily::Dolly, CameraFamily::Pan}) {
    for (const auto& set : unit_sets) {
      SyntheticConfig c;
      c.width = 96;
      c.height = 64;
      c.camera = cam;
      c.seed = seed++;
      c.units.clear();
      for (auto f : set) c.units.push_back(unit(f));
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace fixtures
