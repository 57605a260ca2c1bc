// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "fixtures.hpp"
#include "motionforge/errors.hpp"

using namespace motionforge;
using fixtures::Rng;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidConfig;
}

}  // namespace

TEST_CASE("apply: identity, translation, quarter turn") {
  CHECK(apply(RigidTransform::identity(), Point3(1, 2, 3)) == Point3(1, 2, 3));
  CHECK(apply(RigidTransform::from_translation({0, 0, 1}), Point3::Zero()) == Point3(0, 0, 1));
  const auto rz = RigidTransform::from_axis_angle({0, 0, std::numbers::pi / 2});
  // Hand-written matrix for 90 degrees about z.
  Eigen::Matrix3d expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Point3 p = apply(rz, Point3(1, 0, 0));
  CHECK((p - expected * Point3(1, 0, 0)).norm() < 1e-12);
  CHECK((p - Point3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("compose and inverse") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = fixtures::random_rigid(rng);
    const auto h = fixtures::random_rigid(rng);
    const Point3 p = fixtures::random_vector(rng, 3.0);
    CHECK((apply(compose(g, h), p) - apply(g, apply(h, p))).norm() < 1e-9);
    CHECK(max_entry_difference(compose(g, inverse(g)), RigidTransform::identity()) < 1e-9);
    CHECK(g.is_valid());
  }
}

TEST_CASE("fit_rigid recovers a sampled transform exactly") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = fixtures::random_rigid(rng);
    const auto src = fixtures::random_cloud(rng, 3 + trial % 20);
    std::vector<Point3> dst;
    for (const auto& p : src) dst.push_back(g(p));
    CHECK(max_entry_difference(fit_rigid(src, dst), g) < 1e-9);
  }
}

TEST_CASE("fit_rigid self alignment and noisy fit") {
  Rng rng(3);
  const auto src = fixtures::random_cloud(rng, 10);
  CHECK(max_entry_difference(fit_rigid(src, src), RigidTransform::identity()) < 1e-9);

  std::normal_distribution<double> noise(0.0, 1e-3);
  const auto g = fixtures::random_rigid(rng);
  const auto cloud = fixtures::random_cloud(rng, 100);
  std::vector<Point3> dst;
  for (const auto& p : cloud) dst.push_back(g(p) + Point3(noise(rng), noise(rng), noise(rng)));
  CHECK(frobenius_distance(fit_rigid(cloud, dst), g) < 1e-2);
}

TEST_CASE("fit_rigid weights select the inliers") {
  Rng rng(4);
  const auto g = fixtures::random_rigid(rng);
  const auto src = fixtures::random_cloud(rng, 30);
  std::vector<Point3> dst;
  std::vector<double> w;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const bool outlier = i % 5 == 0;
    dst.push_back(g(src[i]) + (outlier ? Point3(5, -3, 2) : Point3::Zero()));
    w.push_back(outlier ? 0.0 : 1.0 + static_cast<double>(i % 3));
  }
  CHECK(max_entry_difference(fit_rigid(src, dst, w), g) < 1e-9);
}

TEST_CASE("fit_rigid residual never exceeds the identity residual") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto src = fixtures::random_cloud(rng, 20);
    const auto dst = fixtures::random_cloud(rng, 20);
    const auto fit = fit_rigid(src, dst);
    CHECK(fit_residual(fit, src, dst) <= fit_residual(RigidTransform::identity(), src, dst) + 1e-12);
  }
}

TEST_CASE("fit_rigid degenerate inputs") {
  const std::vector<Point3> two{{0, 0, 0}, {1, 0, 0}};
  CHECK(code_of([&] { fit_rigid(two, two); }) == ErrorCode::DegenerateGeometry);
  const std::vector<Point3> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
  CHECK(code_of([&] { fit_rigid(line, line); }) == ErrorCode::DegenerateGeometry);
  const std::vector<Point3> tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}};
  const std::vector<double> w{1, 1, 0, 0};
  CHECK(code_of([&] { fit_rigid(tri, tri, w); }) == ErrorCode::DegenerateGeometry);
}

TEST_CASE("project and backproject") {
  CameraIntrinsics k{500, 500, 352, 224, 704, 448};
  CHECK(project(k, {0, 0, 1}) == Pixel(352, 224));
  CHECK(project(k, {1, 0, 1}) == Pixel(852, 224));
  CHECK(code_of([&] { project(k, {0, 0, -1}); }) == ErrorCode::BehindCamera);
  CHECK(!try_project(k, {0, 0, 0}).has_value());
  CHECK(backproject(k, {352, 224}, 2.0) == Point3(0, 0, 2));
  CHECK(code_of([&] { backproject(k, {1, 1}, 0.0); }) == ErrorCode::InvalidDepth);
  CHECK(code_of([&] { backproject(k, {1, 1}, std::nan("")); }) == ErrorCode::InvalidDepth);

  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const Pixel px(fixtures::uniform(rng, 0, 704), fixtures::uniform(rng, 0, 448));
    const double d = std::exp(fixtures::uniform(rng, std::log(0.1), std::log(100.0)));
    CHECK((project(k, backproject(k, px, d)) - px).norm() < 1e-6);
  }
}

TEST_CASE("intrinsics validation") {
  CHECK_NOTHROW(CameraIntrinsics::centered(8, 8).validate());
  CHECK(code_of([] { CameraIntrinsics{0, 1, 1, 1, 4, 4}.validate(); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { CameraIntrinsics{1, 1, 5, 1, 4, 4}.validate(); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("interpolate_rigid endpoints and geodesic midpoint") {
  Rng rng(7);
  const auto a = fixtures::random_rigid(rng);
  const auto b = fixtures::random_rigid(rng);
  CHECK(max_entry_difference(interpolate_rigid(a, b, 0.0), a) == 0.0);
  CHECK(max_entry_difference(interpolate_rigid(a, b, 1.0), b) == 0.0);

  const auto half_turn = RigidTransform::from_axis_angle({0, 0, std::numbers::pi}, {2, 0, 0});
  const auto mid = interpolate_rigid(RigidTransform::identity(), half_turn, 0.5);
  const auto quarter = RigidTransform::from_axis_angle({0, 0, std::numbers::pi / 2}, {1, 0, 0});
  CHECK(max_entry_difference(mid, quarter) < 1e-9);
}
