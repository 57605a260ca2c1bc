// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <chrono>

#include "fixtures.hpp"
#include "motionforge/errors.hpp"
#include "oracles.hpp"

using namespace motionforge;

namespace {

std::uint64_t seed_with_first(Category c) {
  std::uint64_t seed = 0;
  while (assign_categories(1, seed)[0] != c) ++seed;
  return seed;
}

SyntheticConfig translating_unit() {
  SyntheticConfig c;
  c.seed = 7;
  c.units = {UnitConfig{MotionFamily::Translation, Eigen::Vector3d(0.1, 0, 0), {}}};
  return c;
}

}  // namespace

TEST_CASE("generator: unit translating 0.1 per frame") {
  const auto s = generate_synthetic(translating_unit());
  REQUIRE(s.unit_points.size() == 1);
  double worst = 0.0;
  for (std::size_t t = 0; t < 24; ++t) {
    for (auto i : s.unit_points[0]) {
      const Point3 d = s.world_traj.at(t, i) - s.world_traj.at(0, i);
      worst = std::max(worst, (d - Eigen::Vector3d(0.1 * static_cast<double>(t), 0, 0)).norm());
    }
  }
  CHECK(worst < 1e-12);
  for (auto i : s.static_points) CHECK(s.world_traj.at(23, i) == s.world_traj.at(0, i));
}

TEST_CASE("generator is deterministic and validates its config") {
  const auto a = generate_synthetic(fixtures::noiseless_fixtures()[5]);
  const auto b = generate_synthetic(fixtures::noiseless_fixtures()[5]);
  CHECK(a.camera_traj.positions == b.camera_traj.positions);
  CHECK(a.image.pixels == b.image.pixels);
  SyntheticConfig bad;
  bad.frames = 1;
  CHECK_THROWS_AS(generate_synthetic(bad), Error);
  bad = {};
  bad.outlier_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(synthetic_config_from_json(to_json(fixtures::noiseless_fixtures()[9])).camera == CameraFamily::Dolly);
}

TEST_CASE("dynamic mask: translating unit is dynamic, static points are not") {
  const auto s = generate_synthetic(translating_unit());
  const auto mask = dynamic_mask(s.world_traj, s.scene.width(), s.scene.height());
  for (auto i : s.unit_points[0]) CHECK(mask[i] == 1);
  for (auto i : s.static_points) CHECK(mask[i] == 0);
  CHECK(dynamic_mask(s.world_traj, s.scene.width(), s.scene.height(), 0.02, Exec::Serial) == mask);
}

TEST_CASE("dynamic mask threshold is strict against the median depth") {
  const auto scene = fixtures::flat_scene(4, 1, 2.0);
  auto world = TrajectoryField::static_scene(scene, 3);
  // median depth 2 -> threshold 0.04
  world.at(2, 0) += Eigen::Vector3d(0.05, 0, 0);
  world.at(1, 1) += Eigen::Vector3d(0, 0.03, 0);
  const auto mask = dynamic_mask(world, 4, 1);
  CHECK(mask[0] == 1);
  CHECK(mask[1] == 0);
  CHECK(mask[2] == 0);
  CHECK_THROWS_AS(dynamic_mask(world, 5, 1), Error);
}

TEST_CASE("category coin is fair and seeded") {
  const auto draws = assign_categories(10000, 2026);
  const auto drags = std::count(draws.begin(), draws.end(), Category::Drag);
  CHECK(std::abs(static_cast<double>(drags) / 10000.0 - 0.5) <= 0.02);
  for (auto c : draws) CHECK(c != Category::Borderland);
  CHECK(assign_categories(50, 3) == assign_categories(50, 3));
  CHECK(assign_categories(50, 3) != assign_categories(50, 4));
}

TEST_CASE("pipeline is deterministic; serial and parallel agree bit for bit") {
  const auto s = generate_synthetic(fixtures::noiseless_fixtures()[6]);
  const auto a = build_training_sample(s.scene, s.segments, s.observed_tracks, 11);
  const auto b = build_training_sample(s.scene, s.segments, s.observed_tracks, 11);
  PipelineOptions serial;
  serial.exec = Exec::Serial;
  const auto c = build_training_sample(s.scene, s.segments, s.observed_tracks, 11, serial);
  CHECK(a.tensor == b.tensor);
  CHECK(a.tensor == c.tensor);
  CHECK(to_json(a.provenance) == to_json(c.provenance));
}

TEST_CASE("pipeline drops static segments and records provenance") {
  auto cfg = translating_unit();
  cfg.static_segments = 2;
  const auto s = generate_synthetic(cfg);
  const auto sample = build_training_sample(s.scene, s.segments, s.observed_tracks, 1);
  CHECK(sample.partition.unit_count() == 2);
  const auto j = to_json(sample.provenance);
  CHECK(j["units"].size() == 2);
  CHECK(j["units"][1]["segment"] == 0);
  CHECK(j["units"][0]["segment"].is_null());
  CHECK(j["units"][1]["pixels"] == s.unit_points[0].size());
  CHECK(j["extrinsics"].size() == 24);
}

TEST_CASE("exactly rigid drag unit has zero strength; as brush it follows the summation oracle") {
  const auto s = generate_synthetic(translating_unit());
  const auto drag = build_training_sample(s.scene, s.segments, s.observed_tracks, seed_with_first(Category::Drag));
  REQUIRE(drag.partition.categories[1] == Category::Drag);
  for (std::size_t t = 0; t < 24; ++t) CHECK(std::abs(drag.motions[1].strength[t]) < 1e-9);

  const auto brush = build_training_sample(s.scene, s.segments, s.observed_tracks, seed_with_first(Category::Brush));
  REQUIRE(brush.partition.categories[1] == Category::Brush);
  const auto& pts = s.unit_points[0];
  for (std::size_t t = 1; t < 24; ++t) {
    double sum = 0.0;
    for (auto i : pts) sum += (s.world_traj.at(t, i) - s.world_traj.at(t - 1, i)).norm();
    CHECK(std::abs(brush.motions[1].strength[t] - sum / static_cast<double>(pts.size())) < 1e-9);
  }
}

TEST_CASE("pipeline errors carry their stage") {
  const auto s = generate_synthetic(translating_unit());
  const auto scene = fixtures::flat_scene(8, 8);
  try {
    build_training_sample(scene, s.segments, s.observed_tracks, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
    CHECK(e.stage == "input");
  }
  try {
    build_training_sample(s.scene, s.segments, s.world_traj, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FrameMismatch);
  }
  const std::vector<Mask> wrong{Mask(3, 3)};
  try {
    build_training_sample(s.scene, wrong, s.observed_tracks, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.stage == "select_units");
  }
}

TEST_CASE("end to end: pipeline tensor matches the ground truth on every noiseless fixture") {
  const auto start = std::chrono::steady_clock::now();
  for (const auto& cfg : fixtures::noiseless_fixtures()) {
    const auto s = generate_synthetic(cfg);
    const auto sample = build_training_sample(s.scene, s.segments, s.observed_tracks, s.seed);
    const auto cmp = oracles::compare_to_truth(s, sample.tensor);
    INFO("seed " << cfg.seed << " traj " << cmp.max_traj_px << " strength " << cmp.max_strength);
    CHECK(cmp.max_traj_px <= 1e-5);
    CHECK(cmp.max_strength <= 1e-6);
    CHECK(cmp.label_mismatches == 0);
    CHECK(cmp.category_mismatches == 0);
    CHECK(cmp.sentinel_mismatches == 0);
    CHECK(cmp.produced_units == cmp.expected_units);
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 60.0);
}
