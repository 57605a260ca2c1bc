// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/service.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "motionforge/errors.hpp"

namespace motionforge::service {

namespace {

nlohmann::json error_body(const Error& e) {
  nlohmann::json j{{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}};
  if (e.frame) j["frame"] = *e.frame;
  if (e.unit) j["unit"] = *e.unit;
  if (e.pixel) j["pixel"] = {e.pixel->u, e.pixel->v};
  return j;
}

[[noreturn]] void fail(int status, const std::string& code, const std::string& detail) {
  throw ServiceError{status, {{"error", code}, {"detail", detail}}};
}

[[noreturn]] void fail(int status, const Error& e) { throw ServiceError{status, error_body(e)}; }

std::string new_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << rng();
  return out.str();
}

SessionState state_from_manifest(const nlohmann::json& manifest, const ResourceResolver& resolve) {
  std::map<std::string, std::vector<std::uint8_t>> seen;
  const ResourceResolver recording = [&](const std::string& name) {
    auto bytes = resolve(name);
    seen[name] = bytes;
    return bytes;
  };
  SessionState s;
  try {
    LoadedScene loaded = load_manifest(manifest, recording);
    const auto image = manifest.at("image").get<std::string>();
    const auto ext = std::filesystem::path(image).extension().string();
    s.image_name = "image" + (ext.empty() ? std::string(".png") : ext);
    s.image_bytes = seen.at(image);
    s.depth_bytes = seen.at(manifest.at("depth").get<std::string>());
    s.intrinsics = manifest.at("intrinsics");
    s.normalize = manifest.value("normalize", true);
    s.scene = std::move(loaded.scene);
    s.unit_masks = std::move(loaded.unit_masks);
    s.unit_categories = std::move(loaded.unit_categories);
    s.partition = build_partition(s.scene, s.unit_masks, s.unit_categories);
  } catch (const Error& e) {
    fail(400, e);
  } catch (const nlohmann::json::exception& e) {
    fail(400, "InvalidManifest", e.what());
  }
  return s;
}

nlohmann::json base_manifest(const SessionState& s) {
  nlohmann::json units = nlohmann::json::array();
  for (std::size_t k = 0; k < s.unit_masks.size(); ++k) {
    units.push_back({{"rle", mask_to_rle(s.unit_masks[k])}, {"category", std::string(to_string(s.unit_categories[k]))}});
  }
  return {{"image", s.image_name},
          {"depth", "depth.dpth"},
          {"intrinsics", s.intrinsics},
          {"normalize", s.normalize},
          {"units", units}};
}

int unit_arg(const SessionState& s, const nlohmann::json& op) {
  const int unit = op.at("unit").get<int>();
  if (unit < 1 || unit > static_cast<int>(s.unit_masks.size())) {
    Error e(ErrorCode::InvalidScript, "no unit " + std::to_string(unit));
    e.unit = unit;
    fail(422, e);
  }
  return unit;
}

Mask mask_arg(const SessionState& s, const nlohmann::json& spec) {
  const int w = s.scene.width();
  const int h = s.scene.height();
  if (spec.contains("rle")) return mask_from_rle(spec.at("rle"), w, h);
  if (spec.contains("rect")) {
    const auto& r = spec.at("rect");
    const int u0 = r.at(0).get<int>();
    const int v0 = r.at(1).get<int>();
    const int rw = r.at(2).get<int>();
    const int rh = r.at(3).get<int>();
    Mask m(w, h);
    for (int v = std::max(0, v0); v < std::min(h, v0 + rh); ++v) {
      for (int u = std::max(0, u0); u < std::min(w, u0 + rw); ++u) m.at(u, v) = 1;
    }
    return m;
  }
  fail(400, "BadRequest", "mask needs \"rle\" or \"rect\"");
}

void apply_op(SessionState& s, const nlohmann::json& op, nlohmann::json& diff) {
  const auto name = op.at("op").get<std::string>();
  nlohmann::json entry{{"op", name}};
  if (name == "add_unit") {
    const Category c = category_from_json(op.at("category"));
    if (c == Category::Borderland) fail(422, "InvalidScript", "new units must be drag or brush");
    s.unit_masks.push_back(mask_arg(s, op.at("mask")));
    s.unit_categories.push_back(c);
    entry["unit"] = s.unit_masks.size();
  } else if (name == "remove_unit") {
    const int unit = unit_arg(s, op);
    s.unit_masks.erase(s.unit_masks.begin() + unit - 1);
    s.unit_categories.erase(s.unit_categories.begin() + unit - 1);
    std::map<int, UnitScript> shifted;
    for (auto& [id, us] : s.script.units) {
      if (id != unit) shifted.emplace(id > unit ? id - 1 : id, std::move(us));
    }
    s.script.units = std::move(shifted);
    entry["unit"] = unit;
  } else if (name == "set_category") {
    const int unit = unit_arg(s, op);
    const Category c = category_from_json(op.at("category"));
    if (c == Category::Borderland) fail(422, "InvalidScript", "units must be drag or brush");
    s.unit_categories[static_cast<std::size_t>(unit - 1)] = c;
    if (c == Category::Brush) {
      if (auto it = s.script.units.find(unit); it != s.script.units.end()) it->second.rigid.reset();
    }
    entry["unit"] = unit;
  } else if (name == "set_drag_keyframes") {
    const int unit = unit_arg(s, op);
    if (s.unit_categories[static_cast<std::size_t>(unit - 1)] != Category::Drag) {
      Error e(ErrorCode::InvalidScript, "unit " + std::to_string(unit) + " is not a drag-unit");
      e.unit = unit;
      fail(422, e);
    }
    std::vector<PoseKey> keys;
    for (const auto& k : op.at("keys")) keys.push_back(pose_key_from_json(k));
    s.script.units[unit].rigid = std::move(keys);
    entry["unit"] = unit;
  } else if (name == "set_strength") {
    const int unit = unit_arg(s, op);
    s.script.units[unit].strength = strength_from_json(op.at("strength"));
    entry["unit"] = unit;
  } else if (name == "set_camera_path") {
    std::vector<PoseKey> keys;
    for (const auto& k : op.at("keys")) keys.push_back(pose_key_from_json(k));
    s.script.camera = std::move(keys);
  } else if (name == "set_frames") {
    const int frames = op.at("frames").get<int>();
    if (frames < 1) fail(422, "InvalidScript", "frames must be positive");
    s.script.frames = frames;
    entry["frames"] = frames;
  } else {
    fail(400, "BadRequest", "unknown op \"" + name + "\"");
  }
  diff["ops"].push_back(std::move(entry));
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << line << '\n';
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot append to " + path.string());
}

}  // namespace

SessionState apply_ops(const SessionState& state, const nlohmann::json& ops, nlohmann::json& diff) {
  if (!ops.is_array()) fail(400, "BadRequest", "\"ops\" must be an array");
  SessionState next = state;
  diff = {{"units_before", state.unit_masks.size()}, {"ops", nlohmann::json::array()}};
  try {
    for (const auto& op : ops) apply_op(next, op, diff);
    next.partition = build_partition(next.scene, next.unit_masks, next.unit_categories);
    plan_from_script(next.partition, next.script, true);
  } catch (const Error& e) {
    fail(422, e);
  } catch (const nlohmann::json::exception& e) {
    fail(400, "BadRequest", e.what());
  }
  next.revision = state.revision + 1;
  diff["units_after"] = next.unit_masks.size();
  return next;
}

SessionStore::SessionStore(std::optional<std::filesystem::path> state_dir) : state_dir_(std::move(state_dir)) {
  if (!state_dir_) return;
  std::filesystem::create_directories(*state_dir_);
  std::vector<std::filesystem::path> dirs;
  for (const auto& d : std::filesystem::directory_iterator(*state_dir_)) {
    if (d.is_directory() && std::filesystem::exists(d.path() / "manifest.json")) dirs.push_back(d.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) replay(d);
}

void SessionStore::replay(const std::filesystem::path& dir) {
  const auto text = read_file(dir / "manifest.json");
  auto state = std::make_shared<SessionState>(
      state_from_manifest(nlohmann::json::parse(text.begin(), text.end()), directory_resolver(dir)));
  std::ifstream log(dir / "patches.jsonl");
  std::string line;
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    const auto envelope = nlohmann::json::parse(line);
    nlohmann::json diff;
    state = std::make_shared<SessionState>(apply_ops(*state, envelope.at("ops"), diff));
  }
  insert(std::move(state), dir.filename().string());
}

std::string SessionStore::insert(std::shared_ptr<const SessionState> state, std::optional<std::string> id) {
  std::lock_guard lock(mutex_);
  std::string key = id ? *id : new_id();
  while (!id && sessions_.count(key)) key = new_id();
  auto e = std::make_shared<Entry>();
  e->state = std::move(state);
  sessions_[key] = std::move(e);
  return key;
}

std::string SessionStore::create(const nlohmann::json& manifest, const ResourceResolver& resolve) {
  auto state = std::make_shared<SessionState>(state_from_manifest(manifest, resolve));
  const std::string id = insert(state, std::nullopt);
  if (state_dir_) {
    const auto dir = *state_dir_ / id;
    std::filesystem::create_directories(dir);
    write_file(dir / state->image_name, state->image_bytes);
    write_file(dir / "depth.dpth", state->depth_bytes);
    write_file(dir / "manifest.json", base_manifest(*state).dump() + "\n");
  }
  return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<const SessionState> SessionStore::get(const std::string& id) const {
  auto e = entry(id);
  if (!e) return nullptr;
  std::lock_guard lock(e->write);
  return e->state;
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, e] : sessions_) out.push_back(id);
  return out;
}

nlohmann::json SessionStore::patch(const std::string& id, const nlohmann::json& envelope) {
  auto e = entry(id);
  if (!e) fail(404, "NotFound", "no session " + id);
  if (!envelope.is_object() || !envelope.contains("base_revision") || !envelope.contains("ops")) {
    fail(400, "BadRequest", "patch needs \"base_revision\" and \"ops\"");
  }
  std::lock_guard lock(e->write);
  std::uint64_t base = 0;
  try {
    base = envelope.at("base_revision").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& ex) {
    fail(400, "BadRequest", ex.what());
  }
  if (base != e->state->revision) {
    throw ServiceError{409, {{"error", "RevisionConflict"},
                             {"detail", "base revision " + std::to_string(base) + " is stale"},
                             {"revision", e->state->revision}}};
  }
  nlohmann::json diff;
  auto next = std::make_shared<const SessionState>(apply_ops(*e->state, envelope.at("ops"), diff));
  if (state_dir_) {
    append_line(*state_dir_ / id / "patches.jsonl",
                nlohmann::json{{"base_revision", base}, {"ops", envelope.at("ops")}}.dump());
  }
  e->state = next;
  return {{"revision", next->revision}, {"diff", diff}};
}

nlohmann::json SessionStore::summary(const SessionState& s) const {
  nlohmann::json units = nlohmann::json::array();
  for (int p = 1; p < s.partition.unit_count(); ++p) {
    units.push_back({{"unit", p},
                     {"category", std::string(to_string(s.partition.categories[static_cast<std::size_t>(p)]))},
                     {"pixels", s.partition.pixel_counts[static_cast<std::size_t>(p)]}});
  }
  return {{"revision", s.revision},
          {"width", s.scene.width()},
          {"height", s.scene.height()},
          {"frames", s.script.frames},
          {"units", units},
          {"missing_units", missing_units(s.partition, s.script)},
          {"script", to_json(s.script)}};
}

std::vector<PreviewFrame> SessionStore::preview(const SessionState& s, const PreviewRequest& r) const {
  if (r.from < 0 || r.to >= s.script.frames || r.from > r.to) {
    throw ServiceError{416, {{"error", "FrameOutOfRange"},
                             {"detail", "frames [" + std::to_string(r.from) + ", " + std::to_string(r.to) +
                                            "] outside [0, " + std::to_string(s.script.frames - 1) + "]"}}};
  }
  if (r.stride < 1) fail(400, "BadRequest", "stride must be positive");
  const MotionPlan plan = plan_from_script(s.partition, s.script, true);
  std::vector<float> slice(s.scene.pixel_count() * kControlChannels);
  std::vector<PreviewFrame> out;
  for (int t = r.from; t <= r.to; ++t) {
    compose_frame(s.scene, s.partition, plan, t, slice);
    out.push_back(render_preview_slice(slice, t, s.scene.width(), s.scene.height(), r.stride));
  }
  return out;
}

std::vector<std::uint8_t> SessionStore::export_tensor(const SessionState& s) const {
  const auto missing = missing_units(s.partition, s.script);
  if (!missing.empty()) {
    std::string list;
    for (int m : missing) list += (list.empty() ? "" : ", ") + std::to_string(m);
    throw ServiceError{422, {{"error", "MissingUnitScript"},
                             {"detail", "units without a motion curve: " + list},
                             {"missing_units", missing}}};
  }
  try {
    return encode_tensor(compose(s.scene, s.partition, s.script));
  } catch (const Error& e) {
    fail(422, e);
  }
}

nlohmann::json SessionStore::export_sidecar(const SessionState& s) const {
  const auto bytes = export_tensor(s);
  auto j = tensor_sidecar(decode_tensor(bytes), s.partition);
  j["revision"] = s.revision;
  j["script"] = to_json(s.script);
  return j;
}

nlohmann::json SessionStore::dump(const SessionState& s) const {
  return {{"revision", s.revision},
          {"manifest", base_manifest(s)},
          {"script", to_json(s.script)},
          {"files", {{s.image_name, base64_encode(s.image_bytes)}, {"depth.dpth", base64_encode(s.depth_bytes)}}}};
}

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::uint32_t n = (static_cast<std::uint32_t>(bytes[i]) << 16) |
                            (i + 1 < bytes.size() ? static_cast<std::uint32_t>(bytes[i + 1]) << 8 : 0u) |
                            (i + 2 < bytes.size() ? bytes[i + 2] : 0u);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kAlphabet[n & 63] : '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const auto pos = kAlphabet.find(c);
    if (pos == std::string_view::npos) throw Error(ErrorCode::CorruptHeader, "invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(pos);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

}  // namespace motionforge::service
