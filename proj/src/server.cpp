// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/errors.hpp"
#include "motionforge/service.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose _res macro breaks Eigen.
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace motionforge::service {

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

int query_int(const httplib::Request& req, const char* key, int fallback) {
  if (!req.has_param(key)) return fallback;
  try {
    std::size_t used = 0;
    const std::string text = req.get_param_value(key);
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ServiceError{400, {{"error", "BadRequest"}, {"detail", std::string("bad query parameter ") + key}}};
  }
}

nlohmann::json parse_body(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError{400, {{"error", "BadRequest"}, {"detail", e.what()}}};
  }
}

// Upload forms: multipart with a "manifest" part and one part per referenced
// file, or JSON {"manifest", "files": {name: base64}} or {"manifest_path"}.
std::string create_from_request(SessionStore& store, const httplib::Request& req) {
  if (req.is_multipart_form_data()) {
    if (!req.has_file("manifest")) {
      throw ServiceError{400, {{"error", "InvalidManifest"}, {"detail", "multipart upload lacks a manifest part"}}};
    }
    const auto manifest = parse_body(req.get_file_value("manifest").content);
    const ResourceResolver resolve = [&req](const std::string& name) {
      for (const auto& [field, file] : req.files) {
        if (field == name || file.filename == name) return std::vector<std::uint8_t>(file.content.begin(), file.content.end());
      }
      throw Error(ErrorCode::UnreadableFile, "upload lacks \"" + name + "\"");
    };
    return store.create(manifest, resolve);
  }
  const auto body = parse_body(req.body);
  if (body.contains("manifest_path")) {
    const std::filesystem::path path = body.at("manifest_path").get<std::string>();
    std::vector<std::uint8_t> text;
    try {
      text = read_file(path);
    } catch (const Error& e) {
      throw ServiceError{400, {{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}}};
    }
    return store.create(parse_body(std::string(text.begin(), text.end())), directory_resolver(path.parent_path()));
  }
  if (!body.contains("manifest")) {
    throw ServiceError{400, {{"error", "InvalidManifest"}, {"detail", "body needs \"manifest\" or \"manifest_path\""}}};
  }
  const auto files = body.value("files", nlohmann::json::object());
  const ResourceResolver resolve = [&files](const std::string& name) {
    if (!files.contains(name)) throw Error(ErrorCode::UnreadableFile, "upload lacks \"" + name + "\"");
    return base64_decode(files.at(name).get<std::string>());
  };
  return store.create(body.at("manifest"), resolve);
}

template <class F>
httplib::Server::Handler guarded(F body) {
  return [body](const httplib::Request& req, httplib::Response& res) {
    try {
      body(req, res);
    } catch (const ServiceError& e) {
      send_json(res, e.status, e.body);
    } catch (const Error& e) {
      send_json(res, 400, {{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "Internal"}, {"detail", e.what()}});
    }
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  };
}

}  // namespace

struct Server::Impl {
  explicit Impl(SessionStore& s) : store(s) {}
  SessionStore& store;
  httplib::Server http;

  std::shared_ptr<const SessionState> lookup(const httplib::Request& req) const {
    const std::string id = req.matches[1];
    auto s = store.get(id);
    if (!s) throw ServiceError{404, {{"error", "NotFound"}, {"detail", "no session " + id}}};
    return s;
  }
};

Server::Server(SessionStore& store) : impl_(std::make_unique<Impl>(store)) {
  auto& http = impl_->http;
  Impl* self = impl_.get();
  http.set_payload_max_length(kMaxUploadBytes);

  http.Post("/sessions", guarded([self](const httplib::Request& req, httplib::Response& res) {
    const std::string id = create_from_request(self->store, req);
    send_json(res, 201, {{"id", id}, {"revision", 0}});
  }));
  http.Get("/sessions", guarded([self](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"sessions", self->store.ids()}});
  }));
  http.Get(R"(/sessions/([0-9a-f]+))", guarded([self](const httplib::Request& req, httplib::Response& res) {
    auto s = self->lookup(req);
    auto j = self->store.summary(*s);
    j["id"] = req.matches[1];
    send_json(res, 200, j);
  }));
  http.Patch(R"(/sessions/([0-9a-f]+))", guarded([self](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, self->store.patch(req.matches[1], parse_body(req.body)));
  }));
  http.Get(R"(/sessions/([0-9a-f]+)/preview)", guarded([self](const httplib::Request& req, httplib::Response& res) {
    auto s = self->lookup(req);
    PreviewRequest r;
    r.from = query_int(req, "from", 0);
    r.to = query_int(req, "to", r.from);
    r.stride = query_int(req, "stride", 1);
    const bool raster = query_int(req, "raster", 0) != 0;
    const auto frames = self->store.preview(*s, r);
    if (raster) {
      if (frames.size() != 1) {
        throw ServiceError{400, {{"error", "BadRequest"}, {"detail", "raster previews cover one frame"}}};
      }
      const auto background = decode_image(s->image_bytes);
      const auto png = encode_png(rasterize_preview(frames[0], &background));
      res.status = 200;
      res.set_header("X-MotionForge-Revision", std::to_string(s->revision));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
      return;
    }
    nlohmann::json out{{"revision", s->revision}, {"frames", nlohmann::json::array()}};
    for (const auto& f : frames) out["frames"].push_back(to_json(f));
    send_json(res, 200, out);
  }));
  http.Get(R"(/sessions/([0-9a-f]+)/export)", guarded([self](const httplib::Request& req, httplib::Response& res) {
    auto s = self->lookup(req);
    const auto bytes = self->store.export_tensor(*s);
    res.status = 200;
    res.set_header("X-MotionForge-Revision", std::to_string(s->revision));
    res.set_header("Content-Disposition", "attachment; filename=\"control.ctrl\"");
    res.set_content(std::string(bytes.begin(), bytes.end()), "application/octet-stream");
  }));
  http.Get(R"(/sessions/([0-9a-f]+)/export/sidecar)",
           guarded([self](const httplib::Request& req, httplib::Response& res) {
             auto s = self->lookup(req);
             send_json(res, 200, self->store.export_sidecar(*s));
           }));
  http.Get(R"(/sessions/([0-9a-f]+)/state)", guarded([self](const httplib::Request& req, httplib::Response& res) {
    auto s = self->lookup(req);
    send_json(res, 200, self->store.dump(*s));
  }));
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool Server::run() { return impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace motionforge::service
