// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binary.hpp"
#include "motionforge/errors.hpp"

namespace motionforge {

namespace {

double median_of(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::string dims(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

}  // namespace

SceneDomain SceneDomain::from_depth(const CameraIntrinsics& intrinsics, const Grid<double>& depth,
                                    bool normalize) {
  intrinsics.validate();
  if (!depth.same_shape(intrinsics.width, intrinsics.height)) {
    throw Error(ErrorCode::DimensionMismatch, "depth is " + dims(depth.width(), depth.height()) +
                                                  ", intrinsics expect " +
                                                  dims(intrinsics.width, intrinsics.height));
  }
  SceneDomain scene;
  scene.intrinsics = intrinsics;
  scene.valid = Mask(depth.width(), depth.height());
  scene.depth = Grid<double>(depth.width(), depth.height(), 0.0);
  scene.points = Grid<Point3>(depth.width(), depth.height(), Point3::Zero());

  std::vector<double> valid_depths;
  valid_depths.reserve(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (std::isfinite(depth[i]) && depth[i] > 0.0) {
      scene.valid[i] = 1;
      valid_depths.push_back(depth[i]);
    }
  }
  if (normalize && !valid_depths.empty()) scene.scale = 1.0 / median_of(std::move(valid_depths));

  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const std::size_t i = depth.index(u, v);
      if (!scene.valid[i]) continue;
      const double d = depth[i] * scene.scale;
      scene.depth[i] = d;
      scene.points[i] = backproject(intrinsics, Pixel(u, v), d);
    }
  }
  return scene;
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Borderland: return "borderland";
    case Category::Drag: return "drag";
    case Category::Brush: return "brush";
  }
  return "unknown";
}

Category category_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) {
    const auto code = j.get<int>();
    if (code >= 0 && code <= 2) return static_cast<Category>(code);
  } else if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "borderland") return Category::Borderland;
    if (name == "drag") return Category::Drag;
    if (name == "brush") return Category::Brush;
  }
  throw Error(ErrorCode::InvalidManifest, "unknown category " + j.dump());
}

std::vector<std::vector<std::uint32_t>> UnitPartition::unit_pixels() const {
  std::vector<std::vector<std::uint32_t>> out(categories.size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p].reserve(pixel_counts[p]);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto label = labels[i];
    if (label >= 0) out[static_cast<std::size_t>(label)].push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

Mask UnitPartition::unit_mask(int unit) const {
  Mask m(labels.width(), labels.height());
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] == unit ? 1 : 0;
  return m;
}

SceneDomain load_scene(const std::filesystem::path& image_path, const std::filesystem::path& depth_path,
                       CameraIntrinsics intrinsics, bool normalize) {
  const Image image = read_image(image_path);
  const Grid<float> raw = read_depth(depth_path);
  if (!raw.same_shape(image.width, image.height)) {
    throw Error(ErrorCode::DimensionMismatch, "depth " + dims(raw.width(), raw.height()) + " vs image " +
                                                  dims(image.width, image.height));
  }
  intrinsics.width = image.width;
  intrinsics.height = image.height;
  Grid<double> depth(raw.width(), raw.height());
  for (std::size_t i = 0; i < raw.size(); ++i) depth[i] = raw[i];
  return SceneDomain::from_depth(intrinsics, depth, normalize);
}

UnitPartition build_partition(const SceneDomain& scene, std::span<const Mask> unit_masks,
                              std::span<const Category> categories) {
  if (unit_masks.size() != categories.size()) {
    throw Error(ErrorCode::ShapeMismatch, "build_partition: " + std::to_string(unit_masks.size()) +
                                              " masks but " + std::to_string(categories.size()) +
                                              " categories");
  }
  UnitPartition part;
  part.labels = Grid<std::int32_t>(scene.width(), scene.height(), kInvalidLabel);
  part.categories.assign(1, Category::Borderland);
  part.pixel_counts.assign(unit_masks.size() + 1, 0);
  for (std::size_t i = 0; i < scene.valid.size(); ++i) {
    if (scene.valid[i]) part.labels[i] = 0;
  }

  for (std::size_t m = 0; m < unit_masks.size(); ++m) {
    const Mask& mask = unit_masks[m];
    const auto label = static_cast<std::int32_t>(m + 1);
    if (!mask.same_shape(scene.width(), scene.height())) {
      Error e(ErrorCode::DimensionMismatch,
              "mask " + std::to_string(label) + " is " + dims(mask.width(), mask.height()));
      e.unit = label;
      throw e;
    }
    if (categories[m] == Category::Borderland) {
      Error e(ErrorCode::InvalidManifest, "unit " + std::to_string(label) + " cannot be borderland");
      e.unit = label;
      throw e;
    }
    for (int v = 0; v < mask.height(); ++v) {
      for (int u = 0; u < mask.width(); ++u) {
        const std::size_t i = mask.index(u, v);
        if (!mask[i] || !scene.valid[i]) continue;
        if (part.labels[i] != 0) {
          Error e(ErrorCode::OverlappingMasks, "mask " + std::to_string(label) + " overlaps mask " +
                                                   std::to_string(part.labels[i]) + " at pixel (" +
                                                   std::to_string(u) + ", " + std::to_string(v) + ")");
          e.unit = label;
          e.pixel = PixelRef{u, v};
          throw e;
        }
        part.labels[i] = label;
        ++part.pixel_counts[m + 1];
      }
    }
    if (part.pixel_counts[m + 1] == 0) {
      Error e(ErrorCode::EmptyMask, "mask " + std::to_string(label) + " covers no valid pixel");
      e.unit = label;
      throw e;
    }
    part.categories.push_back(categories[m]);
  }
  for (std::size_t i = 0; i < part.labels.size(); ++i) {
    if (part.labels[i] == 0) ++part.pixel_counts[0];
  }
  return part;
}

std::vector<std::size_t> select_unit_indices(std::span<const Mask> segments, const Mask& dynamic_mask) {
  std::vector<std::size_t> selected;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Mask& seg = segments[s];
    if (!seg.same_shape(dynamic_mask)) {
      throw Error(ErrorCode::DimensionMismatch, "segment " + std::to_string(s) + " does not match the dynamic mask");
    }
    std::size_t area = 0;
    std::size_t overlap = 0;
    for (std::size_t i = 0; i < seg.size(); ++i) {
      if (!seg[i]) continue;
      ++area;
      overlap += dynamic_mask[i] != 0;
    }
    // Strictly more than half: 2 * overlap > area avoids a floating compare.
    if (area > 0 && 2 * overlap > area) selected.push_back(s);
  }
  return selected;
}

std::vector<Mask> select_units_from_segments(std::span<const Mask> segments, const Mask& dynamic_mask) {
  std::vector<Mask> out;
  for (auto s : select_unit_indices(segments, dynamic_mask)) out.push_back(segments[s]);
  return out;
}

Grid<float> decode_depth(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "DPTH");
  in.expect_magic("DPTH");
  const auto version = in.header<std::uint32_t>();
  if (version != 1) throw Error(ErrorCode::CorruptHeader, "DPTH: unsupported version " + std::to_string(version));
  const auto height = in.header<std::uint32_t>();
  const auto width = in.header<std::uint32_t>();
  if (width == 0 || height == 0 || width > (1u << 16) || height > (1u << 16)) {
    throw Error(ErrorCode::CorruptHeader, "DPTH: implausible size");
  }
  Grid<float> depth(static_cast<int>(width), static_cast<int>(height));
  in.require_payload(depth.size() * sizeof(float));
  for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = in.payload<float>();
  return depth;
}

std::vector<std::uint8_t> encode_depth(const Grid<float>& depth) {
  detail::ByteWriter out;
  out.reserve(16 + depth.size() * sizeof(float));
  out.magic("DPTH");
  out.put<std::uint32_t>(1);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(depth.height()));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(depth.width()));
  for (float d : depth.values()) out.put(d);
  return out.take();
}

Grid<float> read_depth(const std::filesystem::path& path) {
  try {
    return decode_depth(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_depth(const std::filesystem::path& path, const Grid<float>& depth) {
  write_file(path, encode_depth(depth));
}

nlohmann::json mask_to_rle(const Mask& mask) {
  auto runs = nlohmann::json::array();
  std::size_t i = 0;
  while (i < mask.size()) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < mask.size() && mask[i]) ++i;
    runs.push_back(start);
    runs.push_back(i - start);
  }
  return runs;
}

Mask mask_from_rle(const nlohmann::json& runs, int width, int height) {
  if (!runs.is_array() || runs.size() % 2 != 0) {
    throw Error(ErrorCode::InvalidManifest, "rle must be a flat array of [start, length] pairs");
  }
  Mask mask(width, height);
  for (std::size_t k = 0; k < runs.size(); k += 2) {
    if (!runs[k].is_number_unsigned() || !runs[k + 1].is_number_unsigned()) {
      throw Error(ErrorCode::InvalidManifest, "rle entries must be nonnegative integers");
    }
    const auto start = runs[k].get<std::size_t>();
    const auto length = runs[k + 1].get<std::size_t>();
    if (start > mask.size() || length > mask.size() - start) {
      throw Error(ErrorCode::DimensionMismatch, "rle run exceeds the " + dims(width, height) + " grid");
    }
    std::fill_n(mask.values().begin() + static_cast<std::ptrdiff_t>(start), length, std::uint8_t{1});
  }
  return mask;
}

ResourceResolver directory_resolver(const std::filesystem::path& base) {
  return [base](const std::string& name) {
    const std::filesystem::path p(name);
    return read_file(p.is_absolute() ? p : base / p);
  };
}

namespace {

Mask load_mask_entry(const nlohmann::json& entry, const ResourceResolver& resolve, int width, int height) {
  Mask mask;
  if (entry.is_string()) {
    mask = mask_from_image(decode_image(resolve(entry.get<std::string>())));
  } else if (entry.is_object() && entry.contains("rle")) {
    mask = mask_from_rle(entry.at("rle"), width, height);
  } else if (entry.is_object() && entry.contains("mask")) {
    mask = mask_from_image(decode_image(resolve(entry.at("mask").get<std::string>())));
  } else {
    throw Error(ErrorCode::InvalidManifest, "mask entry needs a file name or an rle field");
  }
  if (!mask.same_shape(width, height)) {
    throw Error(ErrorCode::DimensionMismatch,
                "mask is " + dims(mask.width(), mask.height()) + ", scene is " + dims(width, height));
  }
  return mask;
}

}  // namespace

LoadedScene load_manifest(const nlohmann::json& manifest, const ResourceResolver& resolve) {
  if (!manifest.is_object()) throw Error(ErrorCode::InvalidManifest, "manifest must be a JSON object");
  for (const char* key : {"image", "depth", "intrinsics"}) {
    if (!manifest.contains(key)) throw Error(ErrorCode::InvalidManifest, std::string("manifest lacks \"") + key + "\"");
  }
  LoadedScene out;
  try {
    out.image = decode_image(resolve(manifest.at("image").get<std::string>()));
    const Grid<float> raw = decode_depth(resolve(manifest.at("depth").get<std::string>()));
    if (!raw.same_shape(out.image.width, out.image.height)) {
      throw Error(ErrorCode::DimensionMismatch, "depth " + dims(raw.width(), raw.height()) + " vs image " +
                                                    dims(out.image.width, out.image.height));
    }
    const auto& k = manifest.at("intrinsics");
    CameraIntrinsics intr{k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                          k.at("cy").get<double>(), out.image.width, out.image.height};
    Grid<double> depth(raw.width(), raw.height());
    for (std::size_t i = 0; i < raw.size(); ++i) depth[i] = raw[i];
    out.scene = SceneDomain::from_depth(intr, depth, manifest.value("normalize", true));

    for (const auto& unit : manifest.value("units", nlohmann::json::array())) {
      out.unit_masks.push_back(load_mask_entry(unit, resolve, out.image.width, out.image.height));
      out.unit_categories.push_back(category_from_json(unit.at("category")));
    }
    for (const auto& seg : manifest.value("segments", nlohmann::json::array())) {
      out.segments.push_back(load_mask_entry(seg, resolve, out.image.width, out.image.height));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, e.what());
  }
  return out;
}

LoadedScene load_manifest(const std::filesystem::path& manifest_path) {
  const auto bytes = read_file(manifest_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, manifest_path.string() + ": " + e.what());
  }
  return load_manifest(manifest, directory_resolver(manifest_path.parent_path()));
}

}  // namespace motionforge
