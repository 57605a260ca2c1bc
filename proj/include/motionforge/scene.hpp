// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/geometry.hpp"
#include "motionforge/grid.hpp"
#include "motionforge/image_io.hpp"

namespace motionforge {

/// The first-frame point domain: one backprojected point per pixel with a
/// depth, plus a validity mask for pixels whose depth is missing.
struct SceneDomain {
  CameraIntrinsics intrinsics;
  Grid<double> depth;
  Grid<Point3> points;
  Mask valid;
  /// normalized length = original length * scale.
  double scale = 1.0;

  int width() const noexcept { return intrinsics.width; }
  int height() const noexcept { return intrinsics.height; }
  std::size_t pixel_count() const noexcept { return valid.size(); }
  std::size_t valid_count() const { return count_set(valid); }

  /// Builds the point grid. Non-finite or nonpositive depths are marked
  /// invalid. With `normalize`, depths are rescaled so the median valid depth
  /// is 1.
  static SceneDomain from_depth(const CameraIntrinsics& intrinsics, const Grid<double>& depth,
                                bool normalize);
};

enum class Category : std::uint8_t { Borderland = 0, Drag = 1, Brush = 2 };

std::string_view to_string(Category c);
/// Accepts "borderland"/"drag"/"brush" or the integer codes 0/1/2.
Category category_from_json(const nlohmann::json& j);

inline constexpr std::int32_t kInvalidLabel = -1;

/// Disjoint labeling of the valid pixels. Label 0 is the borderland; labels
/// 1..P are the user or pipeline units in input order. Invalid pixels carry
/// kInvalidLabel and belong to no unit.
struct UnitPartition {
  Grid<std::int32_t> labels;
  std::vector<Category> categories;
  std::vector<std::size_t> pixel_counts;

  int unit_count() const noexcept { return static_cast<int>(categories.size()); }
  /// Linear pixel indices of every unit, in raster order.
  std::vector<std::vector<std::uint32_t>> unit_pixels() const;
  Mask unit_mask(int unit) const;
};

/// Scene from an image (used for its size) and a DPTH depth file.
SceneDomain load_scene(const std::filesystem::path& image_path, const std::filesystem::path& depth_path,
                       CameraIntrinsics intrinsics, bool normalize = true);

/// Throws OverlappingMasks (with the first conflicting pixel), EmptyMask or
/// DimensionMismatch. Masked pixels without valid depth are dropped; a mask
/// left with no valid pixel counts as empty.
UnitPartition build_partition(const SceneDomain& scene, std::span<const Mask> unit_masks,
                              std::span<const Category> categories);

/// Indices of the segments whose overlap with `dynamic_mask` is strictly more
/// than half of their own area.
std::vector<std::size_t> select_unit_indices(std::span<const Mask> segments, const Mask& dynamic_mask);
std::vector<Mask> select_units_from_segments(std::span<const Mask> segments, const Mask& dynamic_mask);

// DPTH depth files: "DPTH", u32 version = 1, u32 height, u32 width, then
// float32 row-major, little-endian.
Grid<float> decode_depth(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_depth(const Grid<float>& depth);
Grid<float> read_depth(const std::filesystem::path& path);
void write_depth(const std::filesystem::path& path, const Grid<float>& depth);

/// Run-length mask encoding used in JSON documents: flat [start, length, ...]
/// pairs over row-major linear indices.
nlohmann::json mask_to_rle(const Mask& mask);
Mask mask_from_rle(const nlohmann::json& runs, int width, int height);

/// Maps a file name found in a manifest to its bytes.
using ResourceResolver = std::function<std::vector<std::uint8_t>(const std::string&)>;
ResourceResolver directory_resolver(const std::filesystem::path& base);

/// A scene manifest after all referenced files are decoded.
struct LoadedScene {
  SceneDomain scene;
  Image image;
  std::vector<Mask> unit_masks;
  std::vector<Category> unit_categories;
  std::vector<Mask> segments;

  UnitPartition partition() const { return build_partition(scene, unit_masks, unit_categories); }
};

/// Manifest schema:
///   { "image": name, "depth": name,
///     "intrinsics": {"fx", "fy", "cx", "cy"},
///     "normalize": bool (default true),
///     "units": [ {"mask": name | "rle": [...], "category": "drag" | "brush" | 1 | 2} ],
///     "segments": [ name | {"rle": [...]} ] }
LoadedScene load_manifest(const nlohmann::json& manifest, const ResourceResolver& resolve);
LoadedScene load_manifest(const std::filesystem::path& manifest_path);

}  // namespace motionforge
