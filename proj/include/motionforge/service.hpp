// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/compose.hpp"
#include "motionforge/image_io.hpp"
#include "motionforge/preview.hpp"
#include "motionforge/scene.hpp"
#include "motionforge/script.hpp"

namespace motionforge::service {

inline constexpr std::size_t kMaxUploadBytes = 64u << 20;
inline constexpr int kDefaultPort = 8787;

/// Failure with an HTTP status and a JSON body ({"error": code, "detail": ...}).
struct ServiceError {
  int status = 500;
  nlohmann::json body;
};

/// Immutable snapshot of one session. Mutations build a new snapshot.
struct SessionState {
  std::uint64_t revision = 0;
  SceneDomain scene;
  nlohmann::json intrinsics;
  bool normalize = true;
  std::string image_name;
  std::vector<std::uint8_t> image_bytes;
  std::vector<std::uint8_t> depth_bytes;
  std::vector<Mask> unit_masks;
  std::vector<Category> unit_categories;
  UnitPartition partition;
  MotionScript script;
};

struct PreviewRequest {
  int from = 0;
  int to = 0;
  int stride = 1;
};

class SessionStore {
 public:
  /// With `state_dir`, sessions are persisted there as a base manifest plus a
  /// JSON-lines patch log and replayed on construction.
  explicit SessionStore(std::optional<std::filesystem::path> state_dir = std::nullopt);

  /// Throws ServiceError 400 for malformed manifests.
  std::string create(const nlohmann::json& manifest, const ResourceResolver& resolve);

  /// Null when the id is unknown.
  std::shared_ptr<const SessionState> get(const std::string& id) const;
  std::vector<std::string> ids() const;

  /// Patch envelope {"base_revision": r, "ops": [...]}. Returns {"revision", "diff"}.
  /// Throws ServiceError 404 / 409 / 422; a rejected patch leaves the session untouched.
  nlohmann::json patch(const std::string& id, const nlohmann::json& envelope);

  nlohmann::json summary(const SessionState& s) const;
  /// Frames [from, to] composed lazily; 416 when out of range.
  std::vector<PreviewFrame> preview(const SessionState& s, const PreviewRequest& request) const;
  /// CTRL bytes; 422 listing missing units when the script is incomplete.
  std::vector<std::uint8_t> export_tensor(const SessionState& s) const;
  nlohmann::json export_sidecar(const SessionState& s) const;
  /// Self-contained scene manifest (rle masks, base64 files) plus script.
  nlohmann::json dump(const SessionState& s) const;

 private:
  struct Entry {
    std::mutex write;
    std::shared_ptr<const SessionState> state;
  };

  std::shared_ptr<Entry> entry(const std::string& id) const;
  std::string insert(std::shared_ptr<const SessionState> state, std::optional<std::string> id);
  void replay(const std::filesystem::path& dir);

  std::optional<std::filesystem::path> state_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// Applies one patch op list to a copy of `state`; throws ServiceError 422.
SessionState apply_ops(const SessionState& state, const nlohmann::json& ops, nlohmann::json& diff);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// REST front end over a SessionStore.
class Server {
 public:
  explicit Server(SessionStore& store);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace motionforge::service
