// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "motionforge/errors.hpp"

namespace motionforge {

RigidTransform RigidTransform::from_translation(const Eigen::Vector3d& t) {
  RigidTransform out;
  out.translation = t;
  return out;
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis_angle,
                                               const Eigen::Vector3d& t) {
  RigidTransform out;
  const double angle = axis_angle.norm();
  if (angle > 0.0) {
    out.rotation = Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
  }
  out.translation = t;
  return out;
}

Eigen::Vector3d RigidTransform::axis_angle() const {
  const Eigen::AngleAxisd aa(rotation);
  return aa.axis() * aa.angle();
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool RigidTransform::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

Point3 apply(const RigidTransform& t, const Point3& p) { return t(p); }

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

RigidTransform inverse(const RigidTransform& t) {
  RigidTransform out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  return out;
}

double max_entry_difference(const RigidTransform& a, const RigidTransform& b) {
  const double r = (a.rotation - b.rotation).cwiseAbs().maxCoeff();
  const double t = (a.translation - b.translation).cwiseAbs().maxCoeff();
  return std::max(r, t);
}

double frobenius_distance(const RigidTransform& a, const RigidTransform& b) {
  const double r = (a.rotation - b.rotation).squaredNorm();
  const double t = (a.translation - b.translation).squaredNorm();
  return std::sqrt(r + t);
}

RigidTransform interpolate_rigid(const RigidTransform& a, const RigidTransform& b, double s) {
  if (s <= 0.0) return a;
  if (s >= 1.0) return b;
  const Eigen::Quaterniond qa(a.rotation);
  const Eigen::Quaterniond qb(b.rotation);
  RigidTransform out;
  // Eigen's slerp flips the sign of one endpoint when the dot product is
  // negative, which keeps the path on the shorter arc.
  out.rotation = qa.slerp(s, qb).normalized().toRotationMatrix();
  out.translation = (1.0 - s) * a.translation + s * b.translation;
  return out;
}

RigidTransform fit_rigid(std::span<const Point3> source, std::span<const Point3> target,
                         std::span<const double> weights) {
  if (source.size() != target.size() || source.size() != weights.size()) {
    throw Error(ErrorCode::ShapeMismatch, "fit_rigid: source, target and weights differ in length");
  }
  double total = 0.0;
  std::size_t effective = 0;
  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidConfig, "fit_rigid: weights must be finite and nonnegative");
    }
    if (w == 0.0) continue;
    ++effective;
    total += w;
    src_mean += w * source[i];
    dst_mean += w * target[i];
  }
  if (effective < 3 || total <= 0.0) {
    throw Error(ErrorCode::DegenerateGeometry,
                "fit_rigid needs at least 3 weighted points, got " + std::to_string(effective));
  }
  src_mean /= total;
  dst_mean /= total;

  Eigen::MatrixX3d centered(static_cast<Eigen::Index>(effective), 3);
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    const Eigen::Vector3d s = source[i] - src_mean;
    const Eigen::Vector3d d = target[i] - dst_mean;
    centered.row(row++) = std::sqrt(w) * s.transpose();
    cross += w * s * d.transpose();
  }

  const Eigen::JacobiSVD<Eigen::MatrixX3d> spread(centered);
  const Eigen::Vector3d sv = spread.singularValues();
  if (!(sv(0) > 0.0) || sv(1) < kGeometryTolerance * sv(0)) {
    throw Error(ErrorCode::DegenerateGeometry, "fit_rigid: source points are collinear");
  }

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d correction = Eigen::Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0.0) correction(2, 2) = -1.0;

  RigidTransform out;
  out.rotation = v * correction * u.transpose();
  out.translation = dst_mean - out.rotation * src_mean;
  return out;
}

RigidTransform fit_rigid(std::span<const Point3> source, std::span<const Point3> target) {
  const std::vector<double> ones(source.size(), 1.0);
  return fit_rigid(source, target, ones);
}

double fit_residual(const RigidTransform& t, std::span<const Point3> source,
                    std::span<const Point3> target, std::span<const double> weights) {
  double sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sum += w * (target[i] - t(source[i])).squaredNorm();
  }
  return sum;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidConfig, "intrinsics: image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidConfig, "intrinsics: principal point outside the image");
  }
}

CameraIntrinsics CameraIntrinsics::centered(int width, int height) {
  return CameraIntrinsics{static_cast<double>(width), static_cast<double>(width), width / 2.0,
                          height / 2.0, width, height};
}

std::optional<Pixel> try_project(const CameraIntrinsics& k, const Point3& p) {
  if (!(p.z() > kGeometryTolerance)) return std::nullopt;
  return Pixel(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy);
}

Pixel project(const CameraIntrinsics& k, const Point3& p) {
  auto px = try_project(k, p);
  if (!px) throw Error(ErrorCode::BehindCamera, "project: z = " + std::to_string(p.z()));
  return *px;
}

Point3 backproject(const CameraIntrinsics& k, const Pixel& pixel, double depth) {
  if (!std::isfinite(depth) || depth <= 0.0) {
    throw Error(ErrorCode::InvalidDepth, "backproject: depth = " + std::to_string(depth));
  }
  return Point3(depth * (pixel.x() - k.cx) / k.fx, depth * (pixel.y() - k.cy) / k.fy, depth);
}

}  // namespace motionforge
