// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/compose.hpp"

#include <string>

#include "binary.hpp"
#include "motionforge/errors.hpp"
#include "parallel.hpp"

namespace motionforge {

bool on_image(const Pixel& px, int width, int height) {
  return px.x() >= -0.5 && px.x() < width - 0.5 && px.y() >= -0.5 && px.y() < height - 0.5;
}

MotionPlan plan_from_motions(std::span<const UnitMotion> motions, std::span<const RigidTransform> extrinsics) {
  MotionPlan plan;
  plan.frames = static_cast<int>(extrinsics.size());
  plan.camera.assign(extrinsics.begin(), extrinsics.end());
  for (std::size_t p = 0; p < motions.size(); ++p) {
    const auto& m = motions[p];
    if (m.rigid.size() != extrinsics.size() || m.strength.size() != extrinsics.size()) {
      throw Error(ErrorCode::ShapeMismatch, "unit " + std::to_string(p) + " motion does not span " +
                                                std::to_string(extrinsics.size()) + " frames");
    }
    plan.unit_rigid.push_back(m.rigid);
    plan.unit_strength.push_back(m.strength);
  }
  return plan;
}

namespace {

void check_plan(const SceneDomain& scene, const UnitPartition& partition, const MotionPlan& plan) {
  if (!partition.labels.same_shape(scene.width(), scene.height())) {
    throw Error(ErrorCode::DimensionMismatch, "partition does not match the scene grid");
  }
  const auto units = static_cast<std::size_t>(partition.unit_count());
  const auto frames = static_cast<std::size_t>(plan.frames);
  if (plan.frames < 1 || plan.camera.size() != frames || plan.unit_rigid.size() != units ||
      plan.unit_strength.size() != units) {
    throw Error(ErrorCode::ShapeMismatch, "motion plan does not cover the partition's units and frames");
  }
  for (std::size_t p = 0; p < units; ++p) {
    if (plan.unit_rigid[p].size() != frames || plan.unit_strength[p].size() != frames) {
      throw Error(ErrorCode::ShapeMismatch, "unit " + std::to_string(p) + " curve has the wrong length");
    }
  }
}

// Everything a row needs for one frame: the camera-space transform and the
// strength of every unit.
struct FrameTables {
  std::vector<RigidTransform> to_camera;
  std::vector<float> strength;
};

FrameTables frame_tables(const MotionPlan& plan, int frame) {
  FrameTables tables;
  const auto t = static_cast<std::size_t>(frame);
  const RigidTransform camera_inv = inverse(plan.camera[t]);
  for (std::size_t p = 0; p < plan.unit_rigid.size(); ++p) {
    tables.to_camera.push_back(compose(camera_inv, plan.unit_rigid[p][t]));
    tables.strength.push_back(static_cast<float>(plan.unit_strength[p][t]));
  }
  return tables;
}

void write_pixel(const SceneDomain& scene, const UnitPartition& partition, const RigidTransform* to_camera,
                 float strength, std::size_t i, std::span<float> out) {
  const std::size_t plane = scene.pixel_count();
  const std::int32_t label = partition.labels[i];
  if (label < 0 || !scene.valid[i]) {
    out[kTrajU * plane + i] = kOffFrame;
    out[kTrajV * plane + i] = kOffFrame;
    out[kStrength * plane + i] = 0.0f;
    out[kPartition * plane + i] = 0.0f;
    out[kCategory * plane + i] = 0.0f;
    return;
  }
  const auto projected = try_project(scene.intrinsics, (*to_camera)(scene.points[i]));
  if (projected && on_image(*projected, scene.width(), scene.height())) {
    out[kTrajU * plane + i] = static_cast<float>(projected->x());
    out[kTrajV * plane + i] = static_cast<float>(projected->y());
  } else {
    out[kTrajU * plane + i] = kOffFrame;
    out[kTrajV * plane + i] = kOffFrame;
  }
  out[kStrength * plane + i] = strength;
  out[kPartition * plane + i] = static_cast<float>(label);
  out[kCategory * plane + i] = static_cast<float>(partition.categories[static_cast<std::size_t>(label)]);
}

void write_row(const SceneDomain& scene, const UnitPartition& partition, const FrameTables& tables, int v,
               std::span<float> out) {
  const std::size_t begin = scene.valid.index(0, v);
  for (int u = 0; u < scene.width(); ++u) {
    const std::size_t i = begin + static_cast<std::size_t>(u);
    const std::int32_t label = partition.labels[i];
    const auto p = static_cast<std::size_t>(label < 0 ? 0 : label);
    write_pixel(scene, partition, &tables.to_camera[p], tables.strength[p], i, out);
  }
}

}  // namespace

void compose_frame(const SceneDomain& scene, const UnitPartition& partition, const MotionPlan& plan, int frame,
                   std::span<float> out, Exec exec) {
  check_plan(scene, partition, plan);
  if (frame < 0 || frame >= plan.frames) {
    throw Error(ErrorCode::FrameOutOfRange, "frame " + std::to_string(frame) + " outside the plan");
  }
  if (out.size() != scene.pixel_count() * kControlChannels) {
    throw Error(ErrorCode::ShapeMismatch, "frame slice has the wrong size");
  }
  const FrameTables tables = frame_tables(plan, frame);
  detail::for_each_index(static_cast<std::size_t>(scene.height()), exec,
                         [&](std::size_t v) { write_row(scene, partition, tables, static_cast<int>(v), out); });
}

void compose_frame_reference(const SceneDomain& scene, const UnitPartition& partition, const MotionPlan& plan,
                             int frame, std::span<float> out) {
  check_plan(scene, partition, plan);
  const auto t = static_cast<std::size_t>(frame);
  for (std::size_t i = 0; i < scene.pixel_count(); ++i) {
    const std::int32_t label = partition.labels[i];
    const auto p = static_cast<std::size_t>(label < 0 ? 0 : label);
    const RigidTransform to_camera = compose(inverse(plan.camera[t]), plan.unit_rigid[p][t]);
    write_pixel(scene, partition, &to_camera, static_cast<float>(plan.unit_strength[p][t]), i, out);
  }
}

ControlTensor compose_plan(const SceneDomain& scene, const UnitPartition& partition, const MotionPlan& plan,
                           Exec exec) {
  check_plan(scene, partition, plan);
  ControlTensor tensor(plan.frames, scene.height(), scene.width());
  std::vector<FrameTables> tables;
  tables.reserve(static_cast<std::size_t>(plan.frames));
  for (int t = 0; t < plan.frames; ++t) tables.push_back(frame_tables(plan, t));
  const auto rows = static_cast<std::size_t>(scene.height());
  detail::for_each_index(static_cast<std::size_t>(plan.frames) * rows, exec, [&](std::size_t k) {
    const auto t = static_cast<int>(k / rows);
    const auto v = static_cast<int>(k % rows);
    write_row(scene, partition, tables[static_cast<std::size_t>(t)], v, tensor.frame(t));
  });
  return tensor;
}

ControlTensor compose(const SceneDomain& scene, const UnitPartition& partition, const MotionScript& script,
                      Exec exec) {
  return compose_plan(scene, partition, plan_from_script(partition, script), exec);
}

ControlTensor compose_from_pipeline(const SceneDomain& scene, const UnitPartition& partition,
                                    std::span<const UnitMotion> motions,
                                    std::span<const RigidTransform> extrinsics, Exec exec) {
  if (motions.size() != static_cast<std::size_t>(partition.unit_count())) {
    throw Error(ErrorCode::MissingUnitScript, "pipeline supplied " + std::to_string(motions.size()) +
                                                  " unit motions for " + std::to_string(partition.unit_count()) +
                                                  " units");
  }
  for (std::size_t p = 0; p < motions.size(); ++p) {
    if (motions[p].category != partition.categories[p]) {
      throw Error(ErrorCode::InvalidScript, "unit " + std::to_string(p) + " motion category differs from the partition");
    }
  }
  return compose_plan(scene, partition, plan_from_motions(motions, extrinsics), exec);
}

std::vector<std::uint8_t> encode_tensor(const ControlTensor& tensor) {
  detail::ByteWriter out;
  out.reserve(24 + tensor.data().size() * sizeof(float));
  out.magic("CTRL");
  out.put<std::uint32_t>(1);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(tensor.frames()));
  out.put<std::uint32_t>(kControlChannels);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(tensor.height()));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(tensor.width()));
  for (float x : tensor.data()) out.put(x);
  return out.take();
}

ControlTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "CTRL");
  in.expect_magic("CTRL");
  const auto version = in.header<std::uint32_t>();
  if (version != 1) throw Error(ErrorCode::CorruptHeader, "CTRL: unsupported version " + std::to_string(version));
  const auto frames = in.header<std::uint32_t>();
  const auto channels = in.header<std::uint32_t>();
  const auto height = in.header<std::uint32_t>();
  const auto width = in.header<std::uint32_t>();
  if (channels != kControlChannels) {
    throw Error(ErrorCode::CorruptHeader, "CTRL: expected 5 channels, header says " + std::to_string(channels));
  }
  if (frames == 0 || height == 0 || width == 0 || frames > 100000 || height > (1u << 16) || width > (1u << 16)) {
    throw Error(ErrorCode::CorruptHeader, "CTRL: implausible shape");
  }
  ControlTensor tensor(static_cast<int>(frames), static_cast<int>(height), static_cast<int>(width));
  in.require_payload(tensor.data().size() * sizeof(float));
  for (float& x : tensor.data()) x = in.payload<float>();
  return tensor;
}

void write_tensor(const ControlTensor& tensor, const std::filesystem::path& path) {
  write_file(path, encode_tensor(tensor));
}

ControlTensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

nlohmann::json tensor_sidecar(const ControlTensor& tensor, const UnitPartition& partition) {
  nlohmann::json j;
  j["format"] = "CTRL";
  j["version"] = 1;
  j["shape"] = {tensor.frames(), kControlChannels, tensor.height(), tensor.width()};
  j["channels"] = {"traj_u", "traj_v", "strength", "partition", "category"};
  j["off_frame_value"] = kOffFrame;
  j["units"] = nlohmann::json::array();
  for (int p = 0; p < partition.unit_count(); ++p) {
    const auto c = partition.categories[static_cast<std::size_t>(p)];
    j["units"].push_back({{"id", p},
                          {"category", std::string(to_string(c))},
                          {"category_code", static_cast<int>(c)},
                          {"pixels", partition.pixel_counts[static_cast<std::size_t>(p)]}});
  }
  std::size_t without_depth = 0;
  for (auto label : partition.labels.values()) without_depth += label < 0;
  auto off_frame = nlohmann::json::array();
  for (int t = 0; t < tensor.frames(); ++t) {
    const auto slice = tensor.frame(t);
    std::size_t n = 0;
    for (std::size_t i = 0; i < tensor.plane_size(); ++i) {
      n += partition.labels[i] >= 0 && slice[kTrajU * tensor.plane_size() + i] == kOffFrame &&
           slice[kTrajV * tensor.plane_size() + i] == kOffFrame;
    }
    off_frame.push_back(n);
  }
  j["validity"] = {{"pixels_without_depth", without_depth}, {"off_frame_per_frame", off_frame}};
  return j;
}

}  // namespace motionforge
