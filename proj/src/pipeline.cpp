// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/pipeline.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "motionforge/errors.hpp"
#include "parallel.hpp"

namespace motionforge {

Mask dynamic_mask(const TrajectoryField& world, int width, int height, double threshold_ratio, Exec exec) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (world.point_count != n) {
    throw Error(ErrorCode::DimensionMismatch, "trajectory field holds " + std::to_string(world.point_count) +
                                                  " points for a " + std::to_string(width) + "x" +
                                                  std::to_string(height) + " grid");
  }
  std::vector<double> depths;
  for (std::size_t i = 0; i < n; ++i) {
    if (world.is_valid(0, i)) depths.push_back(world.at(0, i).z());
  }
  if (depths.empty()) throw Error(ErrorCode::NoValidSamples, "no valid first-frame points");
  const auto mid = depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2);
  std::nth_element(depths.begin(), mid, depths.end());
  double median = *mid;
  if (depths.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(depths.begin(), mid));
  }
  const double threshold = threshold_ratio * median;

  Mask out(width, height);
  detail::for_each_index(n, exec, [&](std::size_t i) {
    if (!world.is_valid(0, i)) return;
    const Point3& x = world.at(0, i);
    for (std::size_t t = 1; t < world.frame_count; ++t) {
      if (world.is_valid(t, i) && (world.at(t, i) - x).norm() > threshold) {
        out[i] = 1;
        return;
      }
    }
  });
  return out;
}

std::vector<Category> assign_categories(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Category> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back((rng() >> 63) ? Category::Drag : Category::Brush);
  return out;
}

namespace {

nlohmann::json pose_json(const RigidTransform& t) {
  const auto aa = t.axis_angle();
  return {{"rotation", {aa.x(), aa.y(), aa.z()}},
          {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

double mean_fit_residual(const TrajectoryField& world, const UnitMotion& m) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 1; t < m.frame_count(); ++t) {
    for (std::size_t k = 0; k < m.indices.size(); ++k) {
      if (!world.is_valid(0, m.indices[k]) || !world.is_valid(t, m.indices[k])) continue;
      sum += m.residual_at(t, k).norm();
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

template <class F>
auto staged(const char* stage, F&& body) {
  try {
    return body();
  } catch (Error& e) {
    if (e.stage.empty()) e.stage = stage;
    throw;
  }
}

}  // namespace

nlohmann::json to_json(const Provenance& p) {
  nlohmann::json j;
  j["seed"] = p.seed;
  j["threshold_ratio"] = p.threshold_ratio;
  j["dynamic_pixels"] = p.dynamic_pixels;
  j["units"] = nlohmann::json::array();
  for (const auto& u : p.units) {
    nlohmann::json e{{"id", u.id},
                     {"category", std::string(to_string(u.category))},
                     {"pixels", u.pixels},
                     {"mean_fit_residual", u.mean_fit_residual}};
    e["segment"] = u.segment ? nlohmann::json(*u.segment) : nlohmann::json(nullptr);
    j["units"].push_back(std::move(e));
  }
  j["extrinsics"] = nlohmann::json::array();
  for (const auto& e : p.extrinsics) j["extrinsics"].push_back(pose_json(e));
  j["strengths"] = p.strengths;
  return j;
}

TrainingSample build_training_sample(const SceneDomain& scene, std::span<const Mask> segments,
                                     const TrajectoryField& camera_traj, std::uint64_t seed,
                                     const PipelineOptions& options) {
  if (camera_traj.point_count != scene.pixel_count()) {
    Error e(ErrorCode::DimensionMismatch, "tracks hold " + std::to_string(camera_traj.point_count) +
                                              " points, scene has " + std::to_string(scene.pixel_count()) +
                                              " pixels");
    e.stage = "input";
    throw e;
  }
  if (camera_traj.frame != TrajectoryFrame::Camera) {
    Error e(ErrorCode::FrameMismatch, "pipeline tracks must be in the camera frame");
    e.stage = "input";
    throw e;
  }
  const Exec exec = options.exec;
  TrainingSample out;

  out.dynamic = staged("dynamic_mask", [&] {
    std::vector<std::uint32_t> tracked;
    for (std::size_t i = 0; i < camera_traj.point_count; ++i) {
      if (camera_traj.is_valid(0, i)) tracked.push_back(static_cast<std::uint32_t>(i));
    }
    const auto rough = solve_extrinsics(camera_traj, tracked, options.preliminary_trim, exec);
    return dynamic_mask(to_world(camera_traj, rough, exec), scene.width(), scene.height(), options.threshold_ratio,
                        exec);
  });

  const auto selected = staged("select_units", [&] { return select_unit_indices(segments, out.dynamic); });
  const auto categories = assign_categories(selected.size(), seed);

  out.partition = staged("partition", [&] {
    std::vector<Mask> masks;
    for (auto s : selected) masks.push_back(segments[s]);
    return build_partition(scene, masks, categories);
  });
  const auto pixels = out.partition.unit_pixels();

  out.extrinsics = staged("extrinsics", [&] { return solve_extrinsics(camera_traj, pixels[0], options.trim, exec); });
  const TrajectoryField world = staged("world", [&] { return to_world(camera_traj, out.extrinsics, exec); });

  staged("decompose", [&] {
    for (int p = 0; p < out.partition.unit_count(); ++p) {
      const auto& pts = pixels[static_cast<std::size_t>(p)];
      if (p == 0 && pts.empty()) {
        UnitMotion m;
        m.rigid.assign(world.frame_count, RigidTransform::identity());
        m.strength.assign(world.frame_count, 0.0);
        out.motions.push_back(std::move(m));
        continue;
      }
      try {
        out.motions.push_back(decompose_unit(world, pts, out.partition.categories[static_cast<std::size_t>(p)], exec));
      } catch (Error& e) {
        if (!e.unit) e.unit = p;
        throw;
      }
    }
    return 0;
  });

  out.tensor = staged("compose", [&] {
    return compose_from_pipeline(scene, out.partition, out.motions, out.extrinsics, exec);
  });

  Provenance& prov = out.provenance;
  prov.seed = seed;
  prov.threshold_ratio = options.threshold_ratio;
  prov.dynamic_pixels = count_set(out.dynamic);
  prov.extrinsics = out.extrinsics;
  for (int p = 0; p < out.partition.unit_count(); ++p) {
    const auto& m = out.motions[static_cast<std::size_t>(p)];
    UnitProvenance u;
    u.id = p;
    u.category = out.partition.categories[static_cast<std::size_t>(p)];
    u.pixels = out.partition.pixel_counts[static_cast<std::size_t>(p)];
    if (p > 0) u.segment = selected[static_cast<std::size_t>(p - 1)];
    u.mean_fit_residual = mean_fit_residual(world, m);
    prov.units.push_back(u);
    prov.strengths.push_back(m.strength);
  }
  return out;
}

}  // namespace motionforge
