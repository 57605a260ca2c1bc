// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "binary.hpp"
#include "motionforge/errors.hpp"
#include "parallel.hpp"

namespace motionforge {

TrajectoryField TrajectoryField::make(TrajectoryFrame frame, std::size_t frames, std::size_t points) {
  TrajectoryField f;
  f.frame = frame;
  f.frame_count = frames;
  f.point_count = points;
  f.positions.assign(frames * points, Point3::Zero());
  f.valid.assign(frames * points, 0);
  return f;
}

TrajectoryField TrajectoryField::static_scene(const SceneDomain& scene, std::size_t frames,
                                              TrajectoryFrame frame) {
  auto f = make(frame, frames, scene.pixel_count());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < f.point_count; ++i) {
      if (!scene.valid[i]) continue;
      f.at(t, i) = scene.points[i];
      f.valid[f.index(t, i)] = 1;
    }
  }
  return f;
}

TrajectoryField scaled(const TrajectoryField& field, double scale) {
  TrajectoryField out = field;
  for (auto& p : out.positions) p *= scale;
  return out;
}

StrengthCurve motion_strength(std::span<const Point3> offsets, std::span<const std::uint8_t> valid,
                              std::size_t frames, std::size_t points, Exec exec) {
  if (frames == 0) throw Error(ErrorCode::InvalidConfig, "motion_strength needs at least one frame");
  if (offsets.size() != frames * points || valid.size() != frames * points) {
    throw Error(ErrorCode::ShapeMismatch, "motion_strength: offsets/valid are not T x N");
  }
  StrengthCurve curve;
  curve.values.assign(frames, 0.0);
  std::vector<std::uint8_t> empty(frames, 0);
  detail::for_each_index(frames - 1, exec, [&](std::size_t k) {
    const std::size_t t = k + 1;
    const std::size_t cur = t * points;
    const std::size_t prev = (t - 1) * points;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < points; ++i) {
      if (!valid[cur + i] || !valid[prev + i]) continue;
      sum += (offsets[cur + i] - offsets[prev + i]).norm();
      ++n;
    }
    if (n == 0) {
      empty[t] = 1;
    } else {
      curve.values[t] = sum / static_cast<double>(n);
    }
  });
  for (std::size_t t = 1; t < frames; ++t) {
    if (empty[t]) curve.empty_frames.push_back(t);
  }
  return curve;
}

namespace {

void check_extrinsics(const TrajectoryField& field, std::span<const RigidTransform> extrinsics) {
  if (extrinsics.size() != field.frame_count) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(field.frame_count) +
                                              " extrinsics, got " + std::to_string(extrinsics.size()));
  }
  if (!extrinsics.empty() && max_entry_difference(extrinsics[0], RigidTransform::identity()) > kGeometryTolerance) {
    throw Error(ErrorCode::NonIdentityFirstExtrinsic, "the first-frame camera pose must be the identity");
  }
}

TrajectoryField transform_frames(const TrajectoryField& in, std::span<const RigidTransform> per_frame,
                                 TrajectoryFrame out_frame, Exec exec) {
  TrajectoryField out = in;
  out.frame = out_frame;
  // Frame 0 is the identity by definition and is copied untouched.
  detail::for_each_index(in.frame_count > 0 ? in.frame_count - 1 : 0, exec, [&](std::size_t k) {
    const std::size_t t = k + 1;
    const RigidTransform& g = per_frame[t];
    for (std::size_t i = 0; i < in.point_count; ++i) out.at(t, i) = g(in.at(t, i));
  });
  return out;
}

}  // namespace

TrajectoryField to_world(const TrajectoryField& camera, std::span<const RigidTransform> extrinsics, Exec exec) {
  if (camera.frame != TrajectoryFrame::Camera) {
    throw Error(ErrorCode::FrameMismatch, "to_world expects a camera-frame field");
  }
  check_extrinsics(camera, extrinsics);
  return transform_frames(camera, extrinsics, TrajectoryFrame::World, exec);
}

TrajectoryField to_camera(const TrajectoryField& world, std::span<const RigidTransform> extrinsics, Exec exec) {
  if (world.frame != TrajectoryFrame::World) {
    throw Error(ErrorCode::FrameMismatch, "to_camera expects a world-frame field");
  }
  check_extrinsics(world, extrinsics);
  std::vector<RigidTransform> inverses(extrinsics.size());
  std::transform(extrinsics.begin(), extrinsics.end(), inverses.begin(),
                 [](const RigidTransform& e) { return inverse(e); });
  return transform_frames(world, inverses, TrajectoryFrame::Camera, exec);
}

namespace {

// Fit with iterative trimming; weights of the largest residuals drop to zero.
RigidTransform trimmed_fit(std::span<const Point3> source, std::span<const Point3> target, TrimOptions trim) {
  const std::size_t n = source.size();
  std::vector<double> weights(n, 1.0);
  RigidTransform fit = fit_rigid(source, target, weights);
  auto dropped = static_cast<std::size_t>(std::ceil(trim.fraction * static_cast<double>(n)));
  dropped = std::min(dropped, n > 3 ? n - 3 : 0);
  if (dropped == 0) return fit;

  std::vector<double> residual(n);
  std::vector<std::size_t> order(n);
  for (int round = 0; round < trim.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = (target[i] - fit(source[i])).squaredNorm();
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Largest residuals first; index order breaks ties so the result does not
    // depend on the sort implementation.
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(dropped), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return residual[a] != residual[b] ? residual[a] > residual[b] : a < b;
                     });
    std::fill(weights.begin(), weights.end(), 1.0);
    for (std::size_t k = 0; k < dropped; ++k) weights[order[k]] = 0.0;
    fit = fit_rigid(source, target, weights);
  }
  return fit;
}

Error with_frame(const Error& e, std::size_t t) {
  Error tagged(e.code(), "frame " + std::to_string(t) + ": " + e.detail());
  tagged.frame = static_cast<int>(t);
  tagged.unit = e.unit;
  return tagged;
}

}  // namespace

std::vector<RigidTransform> solve_extrinsics(const TrajectoryField& camera,
                                             std::span<const std::uint32_t> static_points, TrimOptions trim,
                                             Exec exec) {
  if (camera.frame != TrajectoryFrame::Camera) {
    throw Error(ErrorCode::FrameMismatch, "solve_extrinsics expects a camera-frame field");
  }
  std::vector<RigidTransform> extrinsics(camera.frame_count, RigidTransform::identity());
  detail::for_each_index(camera.frame_count > 0 ? camera.frame_count - 1 : 0, exec, [&](std::size_t k) {
    const std::size_t t = k + 1;
    std::vector<Point3> source;
    std::vector<Point3> target;
    source.reserve(static_points.size());
    target.reserve(static_points.size());
    for (auto i : static_points) {
      if (!camera.is_valid(0, i) || !camera.is_valid(t, i)) continue;
      source.push_back(camera.at(0, i));
      target.push_back(camera.at(t, i));
    }
    try {
      extrinsics[t] = inverse(trimmed_fit(source, target, trim));
    } catch (const Error& e) {
      throw with_frame(e, t);
    }
  });
  return extrinsics;
}

UnitMotion decompose_unit(const TrajectoryField& world, std::span<const std::uint32_t> unit_points,
                          Category category, Exec exec) {
  if (world.frame != TrajectoryFrame::World) {
    throw Error(ErrorCode::FrameMismatch, "decompose_unit expects a world-frame field");
  }
  if (unit_points.empty()) throw Error(ErrorCode::EmptyUnit, "decompose_unit: unit has no points");

  const std::size_t frames = world.frame_count;
  const std::size_t n = unit_points.size();
  UnitMotion motion;
  motion.category = category;
  motion.indices.assign(unit_points.begin(), unit_points.end());
  motion.rigid.assign(frames, RigidTransform::identity());
  motion.residual.assign(frames * n, Point3::Zero());
  std::vector<std::uint8_t> valid(frames * n, 0);

  detail::for_each_index(frames, exec, [&](std::size_t t) {
    std::vector<Point3> source;
    std::vector<Point3> target;
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = unit_points[k];
      if (!world.is_valid(0, i) || !world.is_valid(t, i)) continue;
      valid[t * n + k] = 1;
      if (category == Category::Drag && t > 0) {
        source.push_back(world.at(0, i));
        target.push_back(world.at(t, i));
      }
    }
    if (category == Category::Drag && t > 0) {
      try {
        motion.rigid[t] = fit_rigid(source, target);
      } catch (const Error& e) {
        throw with_frame(e, t);
      }
    }
    const RigidTransform& r = motion.rigid[t];
    for (std::size_t k = 0; k < n; ++k) {
      if (!valid[t * n + k]) continue;
      const auto i = unit_points[k];
      motion.residual[t * n + k] = world.at(t, i) - r(world.at(0, i));
    }
  });

  if (category == Category::Borderland) {
    motion.strength.assign(frames, 0.0);
  } else {
    auto curve = motion_strength(motion.residual, valid, frames, n, exec);
    motion.strength = std::move(curve.values);
    motion.empty_strength_frames = std::move(curve.empty_frames);
  }
  return motion;
}

std::vector<std::uint8_t> encode_tracks(const TrajectoryField& field) {
  detail::ByteWriter out;
  out.reserve(17 + field.positions.size() * 13);
  out.magic("TRCK");
  out.put<std::uint32_t>(1);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(field.frame_count));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(field.point_count));
  out.put<std::uint8_t>(static_cast<std::uint8_t>(field.frame));
  for (const auto& p : field.positions) {
    out.put(static_cast<float>(p.x()));
    out.put(static_cast<float>(p.y()));
    out.put(static_cast<float>(p.z()));
  }
  for (auto v : field.valid) out.put<std::uint8_t>(v ? 1 : 0);
  return out.take();
}

TrajectoryField decode_tracks(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "TRCK");
  in.expect_magic("TRCK");
  const auto version = in.header<std::uint32_t>();
  if (version != 1) throw Error(ErrorCode::CorruptHeader, "TRCK: unsupported version " + std::to_string(version));
  const auto frames = in.header<std::uint32_t>();
  const auto points = in.header<std::uint32_t>();
  const auto flag = in.header<std::uint8_t>();
  if (flag > 1) throw Error(ErrorCode::CorruptHeader, "TRCK: frame flag must be 0 or 1");
  const std::size_t samples = static_cast<std::size_t>(frames) * points;
  if (frames == 0 || samples > (std::size_t{1} << 32)) throw Error(ErrorCode::CorruptHeader, "TRCK: implausible size");
  in.require_payload(samples * 13);
  auto field = TrajectoryField::make(static_cast<TrajectoryFrame>(flag), frames, points);
  for (auto& p : field.positions) {
    const float x = in.payload<float>();
    const float y = in.payload<float>();
    const float z = in.payload<float>();
    p = Point3(x, y, z);
  }
  for (auto& v : field.valid) v = in.payload<std::uint8_t>() ? 1 : 0;
  return field;
}

void write_tracks(const std::filesystem::path& path, const TrajectoryField& field) {
  write_file(path, encode_tracks(field));
}

TrajectoryField read_tracks(const std::filesystem::path& path) {
  try {
    return decode_tracks(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace motionforge
