// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "motionforge/cli.hpp"
#include "motionforge/service.hpp"

#include <httplib.h>

using namespace motionforge;
using nlohmann::json;

namespace {

/// A server on an ephemeral loopback port, stopped on destruction.
class LiveServer {
 public:
  explicit LiveServer(std::optional<std::filesystem::path> state_dir = std::nullopt)
      : store_(std::move(state_dir)), server_(store_) {
    port_ = server_.bind("127.0.0.1", 0);
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.run(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  service::SessionStore store_;
  service::Server server_;
  int port_ = -1;
  std::thread thread_;
};

std::string png_bytes(int w, int h) {
  fixtures::TempDir dir("svc_png");
  write_png(dir / "i.png", Image{w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 60)});
  const auto b = read_file(dir / "i.png");
  return {b.begin(), b.end()};
}

std::vector<std::uint8_t> depth_bytes(int w, int h, int border) {
  Grid<float> d(w, h, 1.0f);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (u < border || v < border || u >= w - border || v >= h - border) {
        d.at(u, v) = std::numeric_limits<float>::quiet_NaN();
      }
    }
  }
  return encode_depth(d);
}

json upload_body(int w, int h, int dw, int dh, int border = 0) {
  const auto png = png_bytes(w, h);
  const auto k = CameraIntrinsics::centered(w, h);
  return {{"manifest",
           {{"image", "image.png"},
            {"depth", "depth.dpth"},
            {"intrinsics", {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}}},
            {"normalize", false}}},
          {"files",
           {{"image.png", service::base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()))},
            {"depth.dpth", service::base64_encode(depth_bytes(dw, dh, border))}}}};
}

std::string create(httplib::Client& c, const json& body) {
  auto r = c.Post("/sessions", body.dump(), "application/json");
  REQUIRE(r);
  REQUIRE(r->status == 201);
  const auto j = json::parse(r->body);
  CHECK(j["revision"] == 0);
  return j["id"].get<std::string>();
}

httplib::Result patch(httplib::Client& c, const std::string& id, std::uint64_t base, const json& ops) {
  return c.Patch("/sessions/" + id, json{{"base_revision", base}, {"ops", ops}}.dump(), "application/json");
}

json key(int frame, std::array<double, 3> t, std::array<double, 3> r = {0, 0, 0}) {
  return {{"frame", frame}, {"translation", t}, {"rotation", r}};
}

double bbox_area(const json& frame) {
  double lu = 1e9, hu = -1e9, lv = 1e9, hv = -1e9;
  for (const auto& p : frame["points"]) {
    lu = std::min(lu, p["u"].get<double>());
    hu = std::max(hu, p["u"].get<double>());
    lv = std::min(lv, p["v"].get<double>());
    hv = std::max(hv, p["v"].get<double>());
  }
  return (hu - lu) * (hv - lv);
}

double mean_u(const json& frame, int unit) {
  double sum = 0.0;
  int n = 0;
  for (const auto& p : frame["points"]) {
    if (p["unit"] == unit) {
      sum += p["u"].get<double>();
      ++n;
    }
  }
  return sum / n;
}

}  // namespace

TEST_CASE("service: upload creates sessions at revision 0 with distinct ids") {
  LiveServer server;
  auto c = server.client();
  const auto a = create(c, upload_body(32, 24, 32, 24));
  const auto b = create(c, upload_body(32, 24, 32, 24));
  CHECK(a != b);
  auto r = c.Get("/sessions/" + a);
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto j = json::parse(r->body);
  CHECK(j["width"] == 32);
  CHECK(j["units"].empty());
  REQUIRE(patch(c, a, 0, json::array({{{"op", "set_frames"}, {"frames", 5}}}))->status == 200);
  CHECK(json::parse(c.Get("/sessions/" + b)->body)["frames"] == 24);
  CHECK(json::parse(c.Get("/sessions")->body)["sessions"].size() == 2);
  CHECK(c.Get("/sessions/ffff")->status == 404);
}

TEST_CASE("service: depth/image size mismatch is rejected with 400") {
  LiveServer server;
  auto c = server.client();
  auto r = c.Post("/sessions", upload_body(32, 24, 30, 24).dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  CHECK(json::parse(r->body)["error"] == "DimensionMismatch");
  CHECK(c.Post("/sessions", "{not json", "application/json")->status == 400);
}

TEST_CASE("service: multipart upload") {
  LiveServer server;
  auto c = server.client();
  const auto body = upload_body(16, 12, 16, 12);
  const auto png = png_bytes(16, 12);
  const auto depth = depth_bytes(16, 12, 0);
  httplib::MultipartFormDataItems items{
      {"manifest", body["manifest"].dump(), "scene.json", "application/json"},
      {"image.png", png, "image.png", "image/png"},
      {"depth.dpth", std::string(depth.begin(), depth.end()), "depth.dpth", "application/octet-stream"}};
  auto r = c.Post("/sessions", items);
  REQUIRE(r);
  CHECK(r->status == 201);
}

TEST_CASE("service: add units, overlap is 422 and leaves the session untouched") {
  LiveServer server;
  auto c = server.client();
  const auto id = create(c, upload_body(32, 24, 32, 24));
  auto r = patch(c, id, 0, json::array({{{"op", "add_unit"}, {"category", "drag"}, {"mask", {{"rect", {2, 2, 6, 6}}}}}}));
  REQUIRE(r->status == 200);
  CHECK(json::parse(r->body)["revision"] == 1);
  r = patch(c, id, 1, json::array({{{"op", "add_unit"}, {"category", "brush"}, {"mask", {{"rect", {5, 5, 6, 6}}}}}}));
  CHECK(r->status == 422);
  CHECK(json::parse(r->body)["error"] == "OverlappingMasks");
  const auto s = json::parse(c.Get("/sessions/" + id)->body);
  CHECK(s["revision"] == 1);
  CHECK(s["units"].size() == 1);
  CHECK(patch(c, id, 1, json::array({{{"op", "explode"}}}))->status == 400);
  CHECK(patch(c, id, 1, json::array({{{"op", "set_drag_keyframes"}, {"unit", 1}, {"keys", {key(40, {0, 0, 0})}}}}))
            ->status == 422);
  CHECK(patch(c, id, 1, json::array({{{"op", "set_strength"}, {"unit", 3}, {"strength", 0.1}}}))->status == 422);
}

TEST_CASE("service: concurrent patches on one revision, exactly one wins") {
  LiveServer server;
  auto c = server.client();
  const auto id = create(c, upload_body(32, 24, 32, 24));
  std::vector<int> status(8);
  std::vector<std::thread> workers;
  for (int k = 0; k < 8; ++k) {
    workers.emplace_back([&, k] {
      auto mine = server.client();
      auto r = patch(mine, id, 0, json::array({{{"op", "set_frames"}, {"frames", 10 + k}}}));
      status[static_cast<std::size_t>(k)] = r ? r->status : -1;
    });
  }
  for (auto& w : workers) w.join();
  CHECK(std::count(status.begin(), status.end(), 200) == 1);
  CHECK(std::count(status.begin(), status.end(), 409) == 7);
  auto stale = patch(c, id, 0, json::array());
  CHECK(stale->status == 409);
  CHECK(json::parse(stale->body)["revision"] == 1);
}

TEST_CASE("service: preview is pure, follows a dolly-in, rejects bad ranges") {
  LiveServer server;
  auto c = server.client();
  const auto id = create(c, upload_body(40, 30, 40, 30, 8));
  REQUIRE(patch(c, id, 0,
                json::array({{{"op", "set_frames"}, {"frames", 8}},
                             {{"op", "set_camera_path"}, {"keys", {key(7, {0, 0, 0.35})}}}}))
              ->status == 200);
  auto first = c.Get("/sessions/" + id + "/preview?from=0&to=0");
  auto last = c.Get("/sessions/" + id + "/preview?from=7&to=7");
  REQUIRE(first->status == 200);
  REQUIRE(last->status == 200);
  CHECK(bbox_area(json::parse(last->body)["frames"][0]) > bbox_area(json::parse(first->body)["frames"][0]));
  CHECK(c.Get("/sessions/" + id + "/preview?from=7&to=7")->body == last->body);
  CHECK(json::parse(c.Get("/sessions/" + id)->body)["revision"] == 1);
  CHECK(c.Get("/sessions/" + id + "/preview?from=8&to=8")->status == 416);
  CHECK(c.Get("/sessions/" + id + "/preview?from=3&to=2")->status == 416);
  auto png = c.Get("/sessions/" + id + "/preview?from=3&raster=1");
  REQUIRE(png->status == 200);
  CHECK(png->get_header_value("Content-Type") == "image/png");
  CHECK(png->get_header_value("X-MotionForge-Revision") == "1");
}

TEST_CASE("service: drag keyframes move the unit; zero-strength brush stays put") {
  LiveServer server;
  auto c = server.client();
  const auto id = create(c, upload_body(40, 30, 40, 30));
  REQUIRE(patch(c, id, 0,
                json::array({{{"op", "set_frames"}, {"frames", 6}},
                             {{"op", "add_unit"}, {"category", "drag"}, {"mask", {{"rect", {4, 4, 8, 8}}}}},
                             {{"op", "add_unit"}, {"category", "brush"}, {"mask", {{"rect", {20, 4, 8, 8}}}}},
                             {{"op", "set_drag_keyframes"}, {"unit", 1}, {"keys", {key(5, {0.1, 0, 0})}}},
                             {{"op", "set_strength"}, {"unit", 2}, {"strength", 0.0}}}))
              ->status == 200);
  const auto frames = json::parse(c.Get("/sessions/" + id + "/preview?from=0&to=5")->body)["frames"];
  REQUIRE(frames.size() == 6);
  for (int t = 1; t < 6; ++t) {
    CHECK(mean_u(frames[t], 1) > mean_u(frames[t - 1], 1));
    CHECK(mean_u(frames[t], 2) == mean_u(frames[0], 2));
  }
}

TEST_CASE("service: export needs every unit scripted; export matches the CLI on the dumped state") {
  LiveServer server;
  auto c = server.client();
  const auto id = create(c, upload_body(24, 16, 24, 16));
  REQUIRE(patch(c, id, 0,
                json::array({{{"op", "set_frames"}, {"frames", 4}},
                             {{"op", "add_unit"}, {"category", "drag"}, {"mask", {{"rect", {1, 1, 5, 5}}}}},
                             {{"op", "add_unit"}, {"category", "brush"}, {"mask", {{"rect", {10, 1, 5, 5}}}}},
                             {{"op", "set_drag_keyframes"}, {"unit", 1}, {"keys", {key(3, {0.05, 0, 0}, {0, 0, 0.1})}}},
                             {{"op", "set_camera_path"}, {"keys", {key(3, {0, 0.02, 0.05})}}}}))
              ->status == 200);
  auto missing = c.Get("/sessions/" + id + "/export");
  REQUIRE(missing);
  CHECK(missing->status == 422);
  const auto body = json::parse(missing->body);
  CHECK(body["error"] == "MissingUnitScript");
  CHECK(body["missing_units"] == json::array({2}));
  CHECK(body["detail"].get<std::string>().find('2') != std::string::npos);

  REQUIRE(patch(c, id, 1, json::array({{{"op", "set_strength"}, {"unit", 2}, {"strength", 0.3}}}))->status == 200);
  auto exported = c.Get("/sessions/" + id + "/export");
  REQUIRE(exported->status == 200);
  CHECK(c.Get("/sessions/" + id + "/export")->body == exported->body);
  CHECK(c.Get("/sessions/" + id + "/export/sidecar")->status == 200);

  const auto dump = json::parse(c.Get("/sessions/" + id + "/state")->body);
  fixtures::TempDir dir("svc_export");
  for (const auto& [name, data] : dump["files"].items()) {
    write_file(dir / name, service::base64_decode(data.get<std::string>()));
  }
  write_file(dir / "scene.json", dump["manifest"].dump());
  write_file(dir / "script.json", dump["script"].dump());
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(cli::run({"compose", "--scene", (dir / "scene.json").string(), "--script", (dir / "script.json").string(),
                    "--out", (dir / "t.ctrl").string()},
                   out, err) == 0);
  const auto cli_bytes = read_file(dir / "t.ctrl");
  CHECK(std::string(cli_bytes.begin(), cli_bytes.end()) == exported->body);
}

TEST_CASE("service: oversized uploads get 413") {
  LiveServer server;
  auto c = server.client();
  const std::string big(service::kMaxUploadBytes + 1024, 'x');
  auto r = c.Post("/sessions", big, "application/json");
  REQUIRE(r);
  CHECK(r->status == 413);
}

TEST_CASE("service: sessions replay from the state directory") {
  fixtures::TempDir dir("svc_state");
  std::string id;
  std::string exported;
  {
    LiveServer server(dir.path());
    auto c = server.client();
    id = create(c, upload_body(20, 14, 20, 14));
    REQUIRE(patch(c, id, 0,
                  json::array({{{"op", "set_frames"}, {"frames", 3}},
                               {{"op", "add_unit"}, {"category", "brush"}, {"mask", {{"rect", {2, 2, 4, 4}}}}},
                               {{"op", "set_strength"}, {"unit", 1}, {"strength", 0.2}}}))
                ->status == 200);
    REQUIRE(patch(c, id, 1, json::array({{{"op", "set_camera_path"}, {"keys", {key(2, {0.01, 0, 0})}}}}))->status ==
            200);
    exported = c.Get("/sessions/" + id + "/export")->body;
  }
  LiveServer again(dir.path());
  auto c = again.client();
  auto s = c.Get("/sessions/" + id);
  REQUIRE(s);
  REQUIRE(s->status == 200);
  CHECK(json::parse(s->body)["revision"] == 2);
  CHECK(c.Get("/sessions/" + id + "/export")->body == exported);
}
