// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/compose.hpp"
#include "motionforge/image_io.hpp"

namespace motionforge {

using Rgb = std::array<std::uint8_t, 3>;

/// Deterministic color per partition id; the borderland is gray.
Rgb unit_color(int unit);

struct PreviewPoint {
  int unit = 0;
  Category category = Category::Borderland;
  float u = 0.0f;
  float v = 0.0f;
};

struct PreviewUnit {
  int unit = 0;
  Category category = Category::Borderland;
  Rgb color{};
  std::size_t points = 0;
};

struct PreviewFrame {
  int frame = 0;
  int width = 0;
  int height = 0;
  std::vector<PreviewPoint> points;
  std::vector<PreviewUnit> units;
};

/// Point sets of one tensor frame. Off-image samples are skipped; `stride`
/// subsamples the source grid in both directions.
PreviewFrame render_preview(const ControlTensor& tensor, int frame, int stride = 1);
/// Same, from a single (5, H, W) frame slice.
PreviewFrame render_preview_slice(std::span<const float> slice, int frame, int width, int height, int stride = 1);

nlohmann::json to_json(const PreviewFrame& preview);

/// Points splatted over an optional background (dimmed to half intensity).
Image rasterize_preview(const PreviewFrame& preview, const Image* background = nullptr);

}  // namespace motionforge
