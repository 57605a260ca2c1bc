// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>

namespace motionforge {

using Point3 = Eigen::Vector3d;
using Pixel = Eigen::Vector2d;

/// Depths and collinearity ratios below this are treated as zero. Scenes are
/// normalized to median depth 1, so an absolute tolerance is meaningful.
inline constexpr double kGeometryTolerance = 1e-9;

/// An element of SE(3): x -> rotation * x + translation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Eigen::Vector3d& t);
  /// Rotation given as an axis-angle vector (direction = axis, norm = radians).
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis_angle,
                                        const Eigen::Vector3d& t = Eigen::Vector3d::Zero());

  Point3 operator()(const Point3& p) const { return rotation * p + translation; }

  Eigen::Vector3d axis_angle() const;
  Eigen::Matrix4d matrix() const;

  /// Orthonormality and det = +1 within `tol` per entry.
  bool is_valid(double tol = kGeometryTolerance) const;
};

Point3 apply(const RigidTransform& t, const Point3& p);

/// compose(a, b) applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& t);

/// Largest absolute entry difference over rotation and translation.
double max_entry_difference(const RigidTransform& a, const RigidTransform& b);
/// Frobenius norm of the difference of the 3x4 [R | t] matrices.
double frobenius_distance(const RigidTransform& a, const RigidTransform& b);

/// Slerp on rotation along the shortest geodesic, lerp on translation.
RigidTransform interpolate_rigid(const RigidTransform& a, const RigidTransform& b, double s);

/// Weighted least-squares SE(3) fit (no scale):
///   argmin_{R,t} sum_i w_i |target_i - (R source_i + t)|^2
/// Throws DegenerateGeometry with fewer than three positively weighted pairs
/// or when the weighted source cloud is collinear.
RigidTransform fit_rigid(std::span<const Point3> source, std::span<const Point3> target,
                         std::span<const double> weights);
RigidTransform fit_rigid(std::span<const Point3> source, std::span<const Point3> target);

/// sum_i w_i |target_i - t(source_i)|^2; empty weights means all ones.
double fit_residual(const RigidTransform& t, std::span<const Point3> source,
                    std::span<const Point3> target, std::span<const double> weights = {});

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InvalidConfig when the invariants do not hold.
  void validate() const;
  /// fx = fy = width, principal point at the image center.
  static CameraIntrinsics centered(int width, int height);
};

/// Pinhole projection. Throws BehindCamera when z <= 1e-9.
Pixel project(const CameraIntrinsics& k, const Point3& p);
/// Non-throwing projection; nullopt when the point is behind the camera.
std::optional<Pixel> try_project(const CameraIntrinsics& k, const Point3& p);

/// Throws InvalidDepth when depth is not a positive finite number.
Point3 backproject(const CameraIntrinsics& k, const Pixel& pixel, double depth);

}  // namespace motionforge
