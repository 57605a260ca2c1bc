// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>

#include "fixtures.hpp"
#include "motionforge/errors.hpp"
#include "motionforge/preview.hpp"

using namespace motionforge;

namespace {

Error error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorCode::InvalidConfig, "");
}

struct Bbox {
  float min_u = 1e9f, max_u = -1e9f, min_v = 1e9f, max_v = -1e9f;
  float area() const { return (max_u - min_u) * (max_v - min_v); }
};

Bbox bbox(const PreviewFrame& p) {
  Bbox b;
  for (const auto& pt : p.points) {
    b.min_u = std::min(b.min_u, pt.u);
    b.max_u = std::max(b.max_u, pt.u);
    b.min_v = std::min(b.min_v, pt.v);
    b.max_v = std::max(b.max_v, pt.v);
  }
  return b;
}

MotionScript dolly_in(int frames, double step) {
  MotionScript s;
  s.frames = frames;
  s.camera = {fixtures::translation_key(frames - 1, {0, 0, step * (frames - 1)})};
  return s;
}

}  // namespace

TEST_CASE("identity script gives frame 0 repeated") {
  const auto scene = fixtures::flat_scene(9, 7, 1.0);
  const auto partition = build_partition(scene, {}, {});
  MotionScript s;
  s.frames = 4;
  const auto tensor = compose(scene, partition, s);
  CHECK(tensor.frames() == 4);
  for (int v = 0; v < 7; ++v) {
    for (int u = 0; u < 9; ++u) {
      CHECK(tensor.at(0, kTrajU, v, u) == static_cast<float>(u));
      CHECK(tensor.at(0, kTrajV, v, u) == static_cast<float>(v));
    }
  }
  for (int t = 1; t < 4; ++t) {
    CHECK(std::memcmp(tensor.frame(t).data(), tensor.frame(0).data(), tensor.frame_size() * sizeof(float)) == 0);
  }
  for (std::size_t i = 0; i < tensor.plane_size(); ++i) {
    CHECK(tensor.frame(2)[kStrength * tensor.plane_size() + i] == 0.0f);
    CHECK(tensor.frame(2)[kPartition * tensor.plane_size() + i] == 0.0f);
    CHECK(tensor.frame(2)[kCategory * tensor.plane_size() + i] == 0.0f);
  }
}

TEST_CASE("dolly matches per-pixel brute force projection") {
  const int w = 32;
  const int h = 24;
  const auto scene = fixtures::flat_scene(w, h, 1.0);
  const auto partition = build_partition(scene, {}, {});
  const auto script = dolly_in(6, 0.05);
  const auto tensor = compose(scene, partition, script);
  const auto& k = scene.intrinsics;
  for (int t = 0; t < 6; ++t) {
    const double tz = 0.05 * t;
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        // E_t^-1 of a +z translation subtracts tz from every point.
        const double z = 1.0 - tz;
        const double x = (u - k.cx) / k.fx;
        const double y = (v - k.cy) / k.fy;
        const double pu = k.fx * x / z + k.cx;
        const double pv = k.fy * y / z + k.cy;
        const bool inside = pu >= -0.5 && pu < w - 0.5 && pv >= -0.5 && pv < h - 0.5;
        CHECK(tensor.at(t, kTrajU, v, u) == (inside ? static_cast<float>(pu) : kOffFrame));
        CHECK(tensor.at(t, kTrajV, v, u) == (inside ? static_cast<float>(pv) : kOffFrame));
      }
    }
  }
}

TEST_CASE("units: drag moves, brush keeps position, borderland zero") {
  const auto scene = fixtures::flat_scene(20, 10, 1.0);
  const std::vector<Mask> masks{fixtures::rect_mask(20, 10, 2, 2, 4, 4), fixtures::rect_mask(20, 10, 12, 2, 4, 4)};
  const auto partition = build_partition(scene, masks, std::vector<Category>{Category::Drag, Category::Brush});
  MotionScript s;
  s.frames = 3;
  // 0.1 world units right at depth 1 with fx = 20 -> 2 px.
  s.units[1].rigid = std::vector<PoseKey>{fixtures::translation_key(2, {0.1, 0, 0})};
  s.units[1].strength = StrengthSpec{0.05, {}};
  s.units[2].strength = StrengthSpec{0.4, {}};
  const auto tensor = compose(scene, partition, s);
  CHECK(tensor.at(2, kTrajU, 3, 3) == doctest::Approx(5.0));
  CHECK(tensor.at(2, kTrajU, 3, 13) == 13.0f);
  CHECK(tensor.at(2, kStrength, 3, 13) == 0.4f);
  CHECK(tensor.at(2, kStrength, 3, 3) == 0.05f);
  CHECK(tensor.at(2, kStrength, 8, 8) == 0.0f);
  CHECK(tensor.at(1, kPartition, 3, 13) == 2.0f);
  CHECK(tensor.at(1, kCategory, 3, 13) == 2.0f);
  CHECK(tensor.at(1, kCategory, 3, 3) == 1.0f);
  CHECK(tensor.at(0, kStrength, 3, 13) == 0.0f);
}

TEST_CASE("invalid depth and off-image sentinels") {
  const auto scene = fixtures::flat_scene(10, 10, 1.0, 1);
  const auto partition = build_partition(scene, {}, {});
  MotionScript s;
  s.frames = 2;
  s.camera = {fixtures::translation_key(1, {-5.0, 0, 0})};
  const auto tensor = compose(scene, partition, s);
  CHECK(tensor.at(0, kTrajU, 0, 0) == kOffFrame);
  CHECK(tensor.at(0, kPartition, 0, 0) == 0.0f);
  CHECK(tensor.at(1, kTrajU, 5, 5) == kOffFrame);
  CHECK(tensor.at(1, kTrajV, 5, 5) == kOffFrame);
  MotionScript behind;
  behind.frames = 2;
  behind.camera = {fixtures::translation_key(1, {0, 0, 3.0})};
  const auto t2 = compose(scene, partition, behind);
  CHECK(t2.at(1, kTrajU, 5, 5) == kOffFrame);
  const auto side = tensor_sidecar(t2, partition);
  CHECK(side["validity"]["pixels_without_depth"] == 36);
  CHECK(side["validity"]["off_frame_per_frame"][1] == 64);
}

TEST_CASE("compose errors") {
  const auto scene = fixtures::flat_scene(8, 8);
  const std::vector<Mask> masks{fixtures::rect_mask(8, 8, 0, 0, 2, 2)};
  const auto partition = build_partition(scene, masks, std::vector<Category>{Category::Drag});
  MotionScript s;
  CHECK(error_of([&] { compose(scene, partition, s); }).code() == ErrorCode::MissingUnitScript);
  s.units[1].rigid = std::vector<PoseKey>{PoseKey{30}};
  CHECK(error_of([&] { compose(scene, partition, s); }).code() == ErrorCode::KeyframeOutOfRange);
}

TEST_CASE("object then camera equals the chained operator") {
  fixtures::Rng rng(41);
  const auto scene = fixtures::flat_scene(16, 12, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = fixtures::random_rigid(rng, 0.3, 0.1);
    const auto e = fixtures::random_rigid(rng, 0.3, 0.1);
    for (std::size_t i = 0; i < scene.pixel_count(); i += 7) {
      const Point3 x = scene.points[i];
      const Point3 staged = inverse(e)(r(x));
      const Point3 chained = compose(inverse(e), r)(x);
      CHECK((staged - chained).norm() < 1e-9);
    }
  }
}

TEST_CASE("tensor file round trip, header and corruption") {
  const auto scene = fixtures::flat_scene(12, 8);
  const auto partition = build_partition(scene, {}, {});
  MotionScript s;
  s.frames = 3;
  s.camera = {PoseKey{2, {0, 0.05, 0}, {0.02, 0, 0}}};
  const auto tensor = compose(scene, partition, s);
  const auto bytes = encode_tensor(tensor);
  CHECK(bytes.size() == 24 + 3 * 5 * 8 * 12 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CTRL");
  CHECK(decode_tensor(bytes) == tensor);
  CHECK(encode_tensor(decode_tensor(bytes)) == bytes);
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 4);
  CHECK(error_of([&] { decode_tensor(cut); }).code() == ErrorCode::TruncatedPayload);
  auto bad = bytes;
  bad[12] = 4;  // channel count
  CHECK(error_of([&] { decode_tensor(bad); }).code() == ErrorCode::CorruptHeader);
  CHECK(error_of([&] { read_tensor("/nonexistent/t.ctrl"); }).code() == ErrorCode::UnreadableFile);
}

TEST_CASE("compose_from_pipeline agrees with compose on a static scene") {
  const auto scene = fixtures::flat_scene(10, 6);
  const std::vector<Mask> masks{fixtures::rect_mask(10, 6, 1, 1, 3, 3)};
  const auto partition = build_partition(scene, masks, std::vector<Category>{Category::Brush});
  MotionScript s;
  s.frames = 4;
  s.units[1].strength = StrengthSpec{0.0, {}};
  const auto world = TrajectoryField::static_scene(scene, 4);
  std::vector<UnitMotion> motions;
  const auto pixels = partition.unit_pixels();
  for (int p = 0; p < partition.unit_count(); ++p) {
    motions.push_back(decompose_unit(world, pixels[static_cast<std::size_t>(p)], partition.categories[static_cast<std::size_t>(p)]));
  }
  const std::vector<RigidTransform> ext(4);
  CHECK(compose_from_pipeline(scene, partition, motions, ext) == compose(scene, partition, s));
  motions[1].category = Category::Drag;
  CHECK(error_of([&] { compose_from_pipeline(scene, partition, motions, ext); }).code() == ErrorCode::InvalidScript);
}

TEST_CASE("preview: identity layout, dolly bbox growth, purity, errors") {
  const auto scene = fixtures::flat_scene(40, 30, 1.0, 8);
  const auto partition = build_partition(scene, {}, {});
  const auto tensor = compose(scene, partition, dolly_in(8, 0.05));
  const auto first = render_preview(tensor, 0);
  CHECK(first.points.size() == scene.valid_count());
  for (const auto& p : first.points) {
    CHECK(p.u == std::round(p.u));
    CHECK(p.v == std::round(p.v));
    CHECK(scene.valid.at(static_cast<int>(p.u), static_cast<int>(p.v)));
  }
  const auto last = render_preview(tensor, 7);
  CHECK(bbox(last).area() > bbox(first).area());
  CHECK(bbox(last).min_u < bbox(first).min_u);
  CHECK(to_json(render_preview(tensor, 3)) == to_json(render_preview(tensor, 3)));
  CHECK(render_preview(tensor, 0, 2).points.size() < first.points.size());
  CHECK(error_of([&] { render_preview(tensor, 8); }).code() == ErrorCode::FrameOutOfRange);
  CHECK(unit_color(0) == Rgb{128, 128, 128});
  CHECK(unit_color(3) == unit_color(3));
  CHECK(unit_color(1) != unit_color(2));
  const auto raster = rasterize_preview(first);
  CHECK(raster.width == 40);
  CHECK(raster.at(20, 15)[0] == 128);
  CHECK(raster.at(0, 0)[0] == 0);
}

TEST_CASE("reference, serial and parallel compose agree bit for bit") {
  const auto scene = fixtures::flat_scene(50, 30, 1.0, 3);
  const std::vector<Mask> masks{fixtures::rect_mask(50, 30, 5, 5, 10, 10), fixtures::rect_mask(50, 30, 25, 10, 12, 12)};
  const auto partition = build_partition(scene, masks, std::vector<Category>{Category::Drag, Category::Brush});
  MotionScript s;
  s.frames = 6;
  s.camera = {fixtures::pose_key(5, RigidTransform::from_axis_angle({0.02, 0.1, 0}, {0.05, 0, 0.2}))};
  s.units[1].rigid = std::vector<PoseKey>{fixtures::pose_key(5, RigidTransform::from_axis_angle({0, 0, 0.4}, {0.1, 0, 0}))};
  s.units[1].strength = StrengthSpec{0.01, {}};
  s.units[2].strength = StrengthSpec{std::nullopt, {{2, 0.5}, {5, 0.1}}};
  const auto plan = plan_from_script(partition, s);
  const auto parallel = compose_plan(scene, partition, plan, Exec::Parallel);
  const auto serial = compose_plan(scene, partition, plan, Exec::Serial);
  CHECK(encode_tensor(parallel) == encode_tensor(serial));
  std::vector<float> ref(scene.pixel_count() * kControlChannels);
  for (int t = 0; t < 6; ++t) {
    compose_frame_reference(scene, partition, plan, t, ref);
    CHECK(std::memcmp(ref.data(), parallel.frame(t).data(), ref.size() * sizeof(float)) == 0);
  }
}
