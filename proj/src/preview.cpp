// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/preview.hpp"

#include <cmath>
#include <map>
#include <string>

#include "motionforge/errors.hpp"

namespace motionforge {

Rgb unit_color(int unit) {
  if (unit <= 0) return {128, 128, 128};
  // Golden-ratio hue walk at full saturation and value.
  const double hue = std::fmod(0.13 + 0.618033988749895 * unit, 1.0) * 6.0;
  const int sector = static_cast<int>(hue) % 6;
  const double f = hue - std::floor(hue);
  const auto up = static_cast<std::uint8_t>(std::lround(255.0 * f));
  const auto down = static_cast<std::uint8_t>(255 - up);
  switch (sector) {
    case 0: return {255, up, 0};
    case 1: return {down, 255, 0};
    case 2: return {0, 255, up};
    case 3: return {0, down, 255};
    case 4: return {up, 0, 255};
    default: return {255, 0, down};
  }
}

PreviewFrame render_preview_slice(std::span<const float> slice, int frame, int width, int height, int stride) {
  if (stride < 1) throw Error(ErrorCode::InvalidConfig, "preview stride must be positive");
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  if (slice.size() != plane * kControlChannels) throw Error(ErrorCode::ShapeMismatch, "preview slice size");
  PreviewFrame out;
  out.frame = frame;
  out.width = width;
  out.height = height;
  std::map<int, PreviewUnit> units;
  for (int v = 0; v < height; v += stride) {
    for (int u = 0; u < width; u += stride) {
      const std::size_t i = static_cast<std::size_t>(v) * width + u;
      const float pu = slice[kTrajU * plane + i];
      const float pv = slice[kTrajV * plane + i];
      if (pu == kOffFrame && pv == kOffFrame) continue;
      const int unit = static_cast<int>(slice[kPartition * plane + i]);
      const auto category = static_cast<Category>(static_cast<int>(slice[kCategory * plane + i]));
      out.points.push_back(PreviewPoint{unit, category, pu, pv});
      auto [it, inserted] = units.try_emplace(unit, PreviewUnit{unit, category, unit_color(unit), 0});
      ++it->second.points;
    }
  }
  for (const auto& [id, unit] : units) out.units.push_back(unit);
  return out;
}

PreviewFrame render_preview(const ControlTensor& tensor, int frame, int stride) {
  if (frame < 0 || frame >= tensor.frames()) {
    throw Error(ErrorCode::FrameOutOfRange,
                "frame " + std::to_string(frame) + " outside [0, " + std::to_string(tensor.frames() - 1) + "]");
  }
  return render_preview_slice(tensor.frame(frame), frame, tensor.width(), tensor.height(), stride);
}

nlohmann::json to_json(const PreviewFrame& preview) {
  nlohmann::json j;
  j["frame"] = preview.frame;
  j["width"] = preview.width;
  j["height"] = preview.height;
  j["units"] = nlohmann::json::array();
  for (const auto& u : preview.units) {
    j["units"].push_back({{"unit", u.unit},
                          {"category", std::string(to_string(u.category))},
                          {"color", {u.color[0], u.color[1], u.color[2]}},
                          {"points", u.points}});
  }
  auto points = nlohmann::json::array();
  for (const auto& p : preview.points) {
    points.push_back({{"unit", p.unit}, {"category", static_cast<int>(p.category)}, {"u", p.u}, {"v", p.v}});
  }
  j["points"] = std::move(points);
  return j;
}

Image rasterize_preview(const PreviewFrame& preview, const Image* background) {
  Image img{preview.width, preview.height, 3, {}};
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
  if (background && background->width == img.width && background->height == img.height) {
    for (int v = 0; v < img.height; ++v) {
      for (int u = 0; u < img.width; ++u) {
        const std::uint8_t* src = background->at(u, v);
        std::uint8_t* dst = img.at(u, v);
        for (int c = 0; c < 3; ++c) dst[c] = src[background->channels >= 3 ? c : 0] / 2;
      }
    }
  }
  for (const auto& p : preview.points) {
    const auto u = static_cast<int>(std::lround(p.u));
    const auto v = static_cast<int>(std::lround(p.v));
    if (u < 0 || v < 0 || u >= img.width || v >= img.height) continue;
    const Rgb color = unit_color(p.unit);
    std::uint8_t* dst = img.at(u, v);
    dst[0] = color[0];
    dst[1] = color[1];
    dst[2] = color[2];
  }
  return img;
}

}  // namespace motionforge
