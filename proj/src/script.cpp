// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/script.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "motionforge/errors.hpp"

namespace motionforge {

namespace {

void check_frame(int frame, int frames) {
  if (frame < 0 || frame >= frames) {
    Error e(ErrorCode::KeyframeOutOfRange,
            "keyframe " + std::to_string(frame) + " outside [0, " + std::to_string(frames - 1) + "]");
    e.frame = frame;
    throw e;
  }
}

template <typename Key>
std::vector<Key> sorted_keys(std::vector<Key> keys, int frames) {
  for (const auto& k : keys) check_frame(k.frame, frames);
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) { return a.frame < b.frame; });
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (keys[i].frame == keys[i - 1].frame) {
      throw Error(ErrorCode::InvalidScript, "duplicate keyframe at frame " + std::to_string(keys[i].frame));
    }
  }
  return keys;
}

}  // namespace

std::vector<RigidTransform> sample_pose_curve(const std::vector<PoseKey>& keys, int frames) {
  if (frames < 1) throw Error(ErrorCode::InvalidScript, "a script needs at least one frame");
  auto sorted = sorted_keys(keys, frames);
  if (sorted.empty() || sorted.front().frame != 0) {
    sorted.insert(sorted.begin(), PoseKey{});
  } else if (max_entry_difference(sorted.front().transform(), RigidTransform::identity()) > kGeometryTolerance) {
    throw Error(ErrorCode::InvalidScript, "frame-0 pose keyframe must be the identity");
  }
  std::vector<RigidTransform> poses;
  poses.reserve(static_cast<std::size_t>(frames));
  for (const auto& k : sorted) {
    if (!k.axis_angle.allFinite() || !k.translation.allFinite()) {
      throw Error(ErrorCode::InvalidScript, "non-finite pose keyframe at frame " + std::to_string(k.frame));
    }
  }
  std::size_t seg = 0;
  for (int t = 0; t < frames; ++t) {
    while (seg + 1 < sorted.size() && sorted[seg + 1].frame <= t) ++seg;
    if (t == 0) {
      poses.push_back(RigidTransform::identity());
    } else if (seg + 1 == sorted.size() || sorted[seg].frame == t) {
      poses.push_back(sorted[seg].transform());
    } else {
      const auto& a = sorted[seg];
      const auto& b = sorted[seg + 1];
      const double s = static_cast<double>(t - a.frame) / static_cast<double>(b.frame - a.frame);
      poses.push_back(interpolate_rigid(a.transform(), b.transform(), s));
    }
  }
  return poses;
}

std::vector<double> sample_strength_curve(const StrengthSpec& spec, int frames) {
  if (frames < 1) throw Error(ErrorCode::InvalidScript, "a script needs at least one frame");
  std::vector<double> values(static_cast<std::size_t>(frames), 0.0);
  if (spec.constant) {
    if (!(*spec.constant >= 0.0) || !std::isfinite(*spec.constant)) {
      throw Error(ErrorCode::InvalidScript, "strength must be finite and nonnegative");
    }
    std::fill(values.begin() + 1, values.end(), *spec.constant);
    return values;
  }
  auto sorted = sorted_keys(spec.keys, frames);
  for (const auto& k : sorted) {
    if (!(k.value >= 0.0) || !std::isfinite(k.value)) {
      throw Error(ErrorCode::InvalidScript, "strength must be finite and nonnegative");
    }
  }
  if (sorted.empty() || sorted.front().frame != 0) {
    sorted.insert(sorted.begin(), ScalarKey{0, 0.0});
  } else if (sorted.front().value != 0.0) {
    throw Error(ErrorCode::InvalidScript, "frame-0 strength keyframe must be zero");
  }
  std::size_t seg = 0;
  for (int t = 1; t < frames; ++t) {
    while (seg + 1 < sorted.size() && sorted[seg + 1].frame <= t) ++seg;
    const auto idx = static_cast<std::size_t>(t);
    if (seg + 1 == sorted.size() || sorted[seg].frame == t) {
      values[idx] = sorted[seg].value;
    } else {
      const auto& a = sorted[seg];
      const auto& b = sorted[seg + 1];
      const double s = static_cast<double>(t - a.frame) / static_cast<double>(b.frame - a.frame);
      values[idx] = (1.0 - s) * a.value + s * b.value;
    }
  }
  return values;
}

std::vector<int> missing_units(const UnitPartition& partition, const MotionScript& script) {
  std::vector<int> missing;
  for (int p = 1; p < partition.unit_count(); ++p) {
    const auto it = script.units.find(p);
    const auto category = partition.categories[static_cast<std::size_t>(p)];
    if (category == Category::Drag && (it == script.units.end() || !it->second.rigid)) missing.push_back(p);
    if (category == Category::Brush && (it == script.units.end() || !it->second.strength)) missing.push_back(p);
  }
  return missing;
}

MotionPlan plan_from_script(const UnitPartition& partition, const MotionScript& script, bool allow_incomplete) {
  const int frames = script.frames;
  if (frames < 1) throw Error(ErrorCode::InvalidScript, "a script needs at least one frame");
  for (const auto& [unit, entry] : script.units) {
    if (unit <= 0 || unit >= partition.unit_count()) {
      Error e(ErrorCode::InvalidScript, "script names unit " + std::to_string(unit) +
                                            (unit == 0 ? ", the borderland takes no script" : ", which does not exist"));
      e.unit = unit;
      throw e;
    }
    if (entry.rigid && partition.categories[static_cast<std::size_t>(unit)] != Category::Drag) {
      Error e(ErrorCode::InvalidScript, "unit " + std::to_string(unit) + " is not a drag-unit but has a rigid curve");
      e.unit = unit;
      throw e;
    }
  }
  if (!allow_incomplete) {
    const auto missing = missing_units(partition, script);
    if (!missing.empty()) {
      std::string names;
      for (int p : missing) names += (names.empty() ? "" : ", ") + std::to_string(p);
      Error e(ErrorCode::MissingUnitScript, "no motion for unit(s) " + names);
      e.unit = missing.front();
      throw e;
    }
  }

  MotionPlan plan;
  plan.frames = frames;
  plan.camera = sample_pose_curve(script.camera, frames);
  const auto units = static_cast<std::size_t>(partition.unit_count());
  plan.unit_rigid.assign(units, std::vector<RigidTransform>(static_cast<std::size_t>(frames)));
  plan.unit_strength.assign(units, std::vector<double>(static_cast<std::size_t>(frames), 0.0));
  for (const auto& [unit, entry] : script.units) {
    const auto p = static_cast<std::size_t>(unit);
    if (entry.rigid) plan.unit_rigid[p] = sample_pose_curve(*entry.rigid, frames);
    if (entry.strength) plan.unit_strength[p] = sample_strength_curve(*entry.strength, frames);
  }
  return plan;
}

namespace {

Eigen::Vector3d vec3_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::InvalidScript, std::string(what) + " must be a 3-element array");
  }
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json to_json(const Eigen::Vector3d& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidScript, e.what());
  }
}

}  // namespace

PoseKey pose_key_from_json(const nlohmann::json& j) {
  return guarded([&] {
    PoseKey k;
    k.frame = j.at("frame").get<int>();
    if (j.contains("translation")) k.translation = vec3_from_json(j.at("translation"), "translation");
    if (j.contains("rotation")) k.axis_angle = vec3_from_json(j.at("rotation"), "rotation");
    return k;
  });
}

nlohmann::json to_json(const PoseKey& key) {
  return {{"frame", key.frame}, {"translation", to_json(key.translation)}, {"rotation", to_json(key.axis_angle)}};
}

StrengthSpec strength_from_json(const nlohmann::json& j) {
  return guarded([&] {
    StrengthSpec spec;
    if (j.is_number()) {
      spec.constant = j.get<double>();
    } else if (j.is_array()) {
      for (const auto& k : j) spec.keys.push_back(ScalarKey{k.at("frame").get<int>(), k.at("value").get<double>()});
    } else {
      throw Error(ErrorCode::InvalidScript, "strength must be a number or a keyframe list");
    }
    return spec;
  });
}

nlohmann::json to_json(const StrengthSpec& spec) {
  if (spec.constant) return *spec.constant;
  auto out = nlohmann::json::array();
  for (const auto& k : spec.keys) out.push_back({{"frame", k.frame}, {"value", k.value}});
  return out;
}

MotionScript script_from_json(const nlohmann::json& j) {
  return guarded([&] {
    if (!j.is_object()) throw Error(ErrorCode::InvalidScript, "script must be a JSON object");
    MotionScript script;
    script.frames = j.value("frames", 24);
    for (const auto& k : j.value("camera", nlohmann::json::array())) script.camera.push_back(pose_key_from_json(k));
    for (const auto& u : j.value("units", nlohmann::json::array())) {
      const int id = u.at("unit").get<int>();
      if (script.units.count(id)) throw Error(ErrorCode::InvalidScript, "unit " + std::to_string(id) + " listed twice");
      UnitScript entry;
      if (u.contains("rigid")) {
        std::vector<PoseKey> keys;
        for (const auto& k : u.at("rigid")) keys.push_back(pose_key_from_json(k));
        entry.rigid = std::move(keys);
      }
      if (u.contains("strength")) entry.strength = strength_from_json(u.at("strength"));
      script.units.emplace(id, std::move(entry));
    }
    return script;
  });
}

nlohmann::json to_json(const MotionScript& script) {
  nlohmann::json j;
  j["frames"] = script.frames;
  j["camera"] = nlohmann::json::array();
  for (const auto& k : script.camera) j["camera"].push_back(to_json(k));
  j["units"] = nlohmann::json::array();
  for (const auto& [id, entry] : script.units) {
    nlohmann::json u{{"unit", id}};
    if (entry.rigid) {
      u["rigid"] = nlohmann::json::array();
      for (const auto& k : *entry.rigid) u["rigid"].push_back(to_json(k));
    }
    if (entry.strength) u["strength"] = to_json(*entry.strength);
    j["units"].push_back(std::move(u));
  }
  return j;
}

}  // namespace motionforge
