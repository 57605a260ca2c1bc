// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "fixtures.hpp"

using namespace motionforge;

namespace {

struct ComposeCase {
  SceneDomain scene;
  UnitPartition partition;
  MotionPlan plan;

  ComposeCase() : scene(fixtures::flat_scene(704, 448, 1.0)) {
    const std::vector<Mask> masks{fixtures::rect_mask(704, 448, 40, 40, 200, 160),
                                  fixtures::rect_mask(704, 448, 400, 200, 180, 150)};
    partition = build_partition(scene, masks, std::vector<Category>{Category::Drag, Category::Brush});
    MotionScript s;
    s.camera = {fixtures::pose_key(23, RigidTransform::from_axis_angle({0, 0.1, 0}, {0.05, 0, 0.1}))};
    s.units[1].rigid = std::vector<PoseKey>{fixtures::translation_key(23, {0.2, 0, 0})};
    s.units[2].strength = StrengthSpec{0.1, {}};
    plan = plan_from_script(partition, s);
  }
};

const ComposeCase& compose_case() {
  static const ComposeCase c;
  return c;
}

void BM_ComposeFrameReference(benchmark::State& state) {
  const auto& c = compose_case();
  std::vector<float> out(c.scene.pixel_count() * kControlChannels);
  for (auto _ : state) {
    compose_frame_reference(c.scene, c.partition, c.plan, 12, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.scene.pixel_count()));
}
BENCHMARK(BM_ComposeFrameReference);

void BM_ComposeFrame(benchmark::State& state) {
  const auto& c = compose_case();
  const Exec exec = state.range(0) ? Exec::Parallel : Exec::Serial;
  std::vector<float> out(c.scene.pixel_count() * kControlChannels);
  for (auto _ : state) {
    compose_frame(c.scene, c.partition, c.plan, 12, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.scene.pixel_count()));
}
BENCHMARK(BM_ComposeFrame)->ArgName("parallel")->Arg(0)->Arg(1);

void BM_ComposeTensor(benchmark::State& state) {
  const auto& c = compose_case();
  const Exec exec = state.range(0) ? Exec::Parallel : Exec::Serial;
  for (auto _ : state) benchmark::DoNotOptimize(compose_plan(c.scene, c.partition, c.plan, exec));
}
BENCHMARK(BM_ComposeTensor)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MotionStrength(benchmark::State& state) {
  fixtures::Rng rng(5);
  const std::size_t frames = 24;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<Point3> offsets(frames * n);
  for (auto& p : offsets) p = fixtures::random_vector(rng);
  const std::vector<std::uint8_t> valid(frames * n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(motion_strength(offsets, valid, frames, n));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames * n));
}
BENCHMARK(BM_MotionStrength)->Arg(1 << 10)->Arg(1 << 16);

void BM_Pipeline(benchmark::State& state) {
  SyntheticConfig c;
  c.width = 96;
  c.height = 64;
  c.camera = CameraFamily::Orbit;
  const auto s = generate_synthetic(c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_training_sample(s.scene, s.segments, s.observed_tracks, 1));
  }
}
BENCHMARK(BM_Pipeline)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
