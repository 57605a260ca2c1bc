// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "motionforge/grid.hpp"

namespace motionforge {

/// 8-bit interleaved image (1 = gray, 3 = RGB, 4 = RGBA).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t* at(int u, int v) {
    return pixels.data() + (static_cast<std::size_t>(v) * width + u) * channels;
  }
  const std::uint8_t* at(int u, int v) const {
    return pixels.data() + (static_cast<std::size_t>(v) * width + u) * channels;
  }
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Decodes PNG or binary PNM (P5/P6). Throws UnreadableFile on anything else.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

/// Single-channel 8-bit image to mask (nonzero = inside).
Mask mask_from_image(const Image& image);
Image image_from_mask(const Mask& mask);
Mask read_mask(const std::filesystem::path& path);

}  // namespace motionforge
