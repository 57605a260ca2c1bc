// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "motionforge/errors.hpp"
#include "motionforge/pipeline.hpp"
#include "motionforge/preview.hpp"

namespace motionforge {

std::string_view to_string(MotionFamily f) {
  switch (f) {
    case MotionFamily::Static: return "static";
    case MotionFamily::Translation: return "translation";
    case MotionFamily::Rotation: return "rotation";
    case MotionFamily::Screw: return "screw";
    case MotionFamily::RigidSinusoidal: return "rigid_sinusoidal";
  }
  return "unknown";
}

std::string_view to_string(CameraFamily f) {
  switch (f) {
    case CameraFamily::Static: return "static";
    case CameraFamily::Orbit: return "orbit";
    case CameraFamily::Dolly: return "dolly";
    case CameraFamily::Pan: return "pan";
  }
  return "unknown";
}

MotionFamily motion_family_from_string(std::string_view s) {
  for (auto f : {MotionFamily::Static, MotionFamily::Translation, MotionFamily::Rotation, MotionFamily::Screw,
                 MotionFamily::RigidSinusoidal}) {
    if (to_string(f) == s) return f;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown motion family \"" + std::string(s) + "\"");
}

CameraFamily camera_family_from_string(std::string_view s) {
  for (auto f : {CameraFamily::Static, CameraFamily::Orbit, CameraFamily::Dolly, CameraFamily::Pan}) {
    if (to_string(f) == s) return f;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown camera family \"" + std::string(s) + "\"");
}

void SyntheticConfig::validate() const {
  if (frames < 2) throw Error(ErrorCode::InvalidConfig, "synthetic scenes need at least 2 frames");
  if (units.empty()) throw Error(ErrorCode::InvalidConfig, "synthetic scenes need at least one unit");
  if (width <= 0 || height <= 0 || static_cast<long>(width) * height < 64) {
    throw Error(ErrorCode::InvalidConfig, "synthetic scenes need width * height >= 64");
  }
  if (static_segments < 0 || invalid_border < 0) throw Error(ErrorCode::InvalidConfig, "negative counts");
  for (double x : {noise_sigma, outlier_fraction, outlier_magnitude, dropout_fraction, residual_amplitude}) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidConfig, "noise parameters must be >= 0");
  }
  if (outlier_fraction > 1.0 || dropout_fraction >= 1.0) {
    throw Error(ErrorCode::InvalidConfig, "fractions must lie in [0, 1)");
  }
}

namespace {

Eigen::Vector3d vec3(const nlohmann::json& j) {
  return Eigen::Vector3d(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

}  // namespace

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  try {
    SyntheticConfig c;
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.frames = j.value("frames", c.frames);
    if (j.contains("units")) {
      c.units.clear();
      for (const auto& u : j.at("units")) {
        UnitConfig uc;
        if (u.is_string()) {
          uc.family = motion_family_from_string(u.get<std::string>());
        } else {
          uc.family = motion_family_from_string(u.at("family").get<std::string>());
          if (u.contains("velocity")) uc.velocity = vec3(u.at("velocity"));
          if (u.contains("angular_velocity")) uc.angular_velocity = vec3(u.at("angular_velocity"));
        }
        c.units.push_back(uc);
      }
    }
    c.static_segments = j.value("static_segments", c.static_segments);
    if (j.contains("camera")) c.camera = camera_family_from_string(j.at("camera").get<std::string>());
    c.camera_step = j.value("camera_step", c.camera_step);
    c.unit_step = j.value("unit_step", c.unit_step);
    c.residual_amplitude = j.value("residual_amplitude", c.residual_amplitude);
    c.invalid_border = j.value("invalid_border", c.invalid_border);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.outlier_fraction = j.value("outlier_fraction", c.outlier_fraction);
    c.outlier_magnitude = j.value("outlier_magnitude", c.outlier_magnitude);
    c.dropout_fraction = j.value("dropout_fraction", c.dropout_fraction);
    c.seed = j.value("seed", c.seed);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

nlohmann::json to_json(const SyntheticConfig& c) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : c.units) {
    nlohmann::json j{{"family", std::string(to_string(u.family))}};
    if (u.velocity) j["velocity"] = {u.velocity->x(), u.velocity->y(), u.velocity->z()};
    if (u.angular_velocity) {
      j["angular_velocity"] = {u.angular_velocity->x(), u.angular_velocity->y(), u.angular_velocity->z()};
    }
    units.push_back(std::move(j));
  }
  return {{"width", c.width},
          {"height", c.height},
          {"frames", c.frames},
          {"units", units},
          {"static_segments", c.static_segments},
          {"camera", std::string(to_string(c.camera))},
          {"camera_step", c.camera_step},
          {"unit_step", c.unit_step},
          {"residual_amplitude", c.residual_amplitude},
          {"invalid_border", c.invalid_border},
          {"noise_sigma", c.noise_sigma},
          {"outlier_fraction", c.outlier_fraction},
          {"outlier_magnitude", c.outlier_magnitude},
          {"dropout_fraction", c.dropout_fraction},
          {"seed", c.seed}};
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Eigen::Vector3d random_direction(Rng& rng, double z_weight) {
  Eigen::Vector3d d;
  do {
    d = Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), z_weight * uniform(rng, -1, 1));
  } while (d.norm() < 1e-3);
  return d.normalized();
}

RigidTransform about_point(const Eigen::Vector3d& center, const RigidTransform& motion) {
  return compose(RigidTransform::from_translation(center),
                 compose(motion, RigidTransform::from_translation(-center)));
}

std::vector<RigidTransform> camera_curve(const SyntheticConfig& c) {
  std::vector<RigidTransform> poses(static_cast<std::size_t>(c.frames));
  const Eigen::Vector3d pivot(0.0, 0.0, 1.0);
  for (int t = 1; t < c.frames; ++t) {
    const double s = c.camera_step * t;
    auto& e = poses[static_cast<std::size_t>(t)];
    switch (c.camera) {
      case CameraFamily::Static: break;
      case CameraFamily::Orbit:
        e = about_point(pivot, RigidTransform::from_axis_angle(Eigen::Vector3d(0, s, 0)));
        break;
      case CameraFamily::Dolly:
        e = RigidTransform::from_translation(Eigen::Vector3d(0, 0, s));
        break;
      case CameraFamily::Pan:
        e = RigidTransform::from_axis_angle(Eigen::Vector3d(0.2 * s, s, 0));
        break;
    }
  }
  return poses;
}

// Sinusoidal offsets with the affine part removed in every frame, so the
// least-squares rigid fit of x + g is exactly the identity.
std::vector<Eigen::Vector3d> affine_free_residual(std::span<const Point3> local, int frames, double amplitude,
                                                  double phase) {
  const std::size_t n = local.size();
  std::vector<Eigen::Vector3d> out(static_cast<std::size_t>(frames) * n, Eigen::Vector3d::Zero());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& x : local) cov += x * x.transpose();
  const auto cov_solver = cov.ldlt();
  constexpr double k = 40.0;
  for (int t = 1; t < frames; ++t) {
    std::vector<Eigen::Vector3d> g(n);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& x = local[i];
      const double a = k * x.x() + phase;
      const double b = k * x.y() - phase;
      const double c = k * (x.x() + x.y());
      g[i] = amplitude * Eigen::Vector3d(std::sin(0.7 * t + a) - std::sin(a), std::sin(0.5 * t + b) - std::sin(b),
                                         0.5 * (std::sin(0.3 * t + c) - std::sin(c)));
      mean += g[i];
    }
    mean /= static_cast<double>(n);
    Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) cross += local[i] * (g[i] - mean).transpose();
    const Eigen::Matrix3d linear_t = cov_solver.solve(cross);  // B^T
    for (std::size_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(t) * n + i] = g[i] - mean - linear_t.transpose() * local[i];
    }
  }
  return out;
}

}  // namespace

SyntheticScene generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SyntheticScene out;
  out.config = config;
  out.seed = config.seed;
  const int w = config.width;
  const int h = config.height;
  const auto frames = static_cast<std::size_t>(config.frames);
  const auto unit_count = config.units.size();
  const std::size_t region_count = unit_count + static_cast<std::size_t>(config.static_segments);

  // Region layout: one ellipse per grid cell.
  const auto cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(region_count) * w / h)));
  const auto rows = static_cast<int>((region_count + static_cast<std::size_t>(cols) - 1) / static_cast<std::size_t>(cols));
  const double cell_w = static_cast<double>(w) / cols;
  const double cell_h = static_cast<double>(h) / rows;
  std::vector<Mask> regions(region_count, Mask(w, h));
  for (std::size_t r = 0; r < region_count; ++r) {
    const double cu = (static_cast<double>(r % static_cast<std::size_t>(cols)) + 0.5) * cell_w + uniform(rng, -0.05, 0.05) * cell_w;
    const double cv = (static_cast<double>(r / static_cast<std::size_t>(cols)) + 0.5) * cell_h + uniform(rng, -0.05, 0.05) * cell_h;
    const double ru = cell_w * uniform(rng, 0.3, 0.36);
    const double rv = cell_h * uniform(rng, 0.3, 0.36);
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const double du = (u - cu) / ru;
        const double dv = (v - cv) / rv;
        if (du * du + dv * dv <= 1.0) regions[r].at(u, v) = 1;
      }
    }
  }

  // Depth: smooth undulating surface, foreground units slightly closer.
  // Values are rounded to float so DPTH files reproduce the scene exactly.
  const double phase_u = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double phase_v = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  Grid<double> depth(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const bool border = u < config.invalid_border || v < config.invalid_border ||
                          u >= w - config.invalid_border || v >= h - config.invalid_border;
      if (border) {
        depth.at(u, v) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double d = 1.0 + 0.1 * std::sin(2.0 * std::numbers::pi * 1.3 * u / w + phase_u) *
                           std::cos(2.0 * std::numbers::pi * 0.9 * v / h + phase_v);
      for (std::size_t k = 0; k < unit_count; ++k) {
        if (regions[k].at(u, v)) d *= 0.9;
      }
      depth.at(u, v) = static_cast<double>(static_cast<float>(d));
    }
  }
  out.scene = SceneDomain::from_depth(CameraIntrinsics::centered(w, h), depth, false);
  const SceneDomain& scene = out.scene;

  for (std::size_t r = 0; r < region_count; ++r) {
    for (std::size_t i = 0; i < regions[r].size(); ++i) regions[r][i] = regions[r][i] && scene.valid[i];
    if (count_set(regions[r]) < 3) {
      throw Error(ErrorCode::InvalidConfig, "image too small for " + std::to_string(region_count) + " regions");
    }
  }
  out.unit_masks.assign(regions.begin(), regions.begin() + static_cast<std::ptrdiff_t>(unit_count));
  out.segments = regions;

  Mask in_unit(w, h);
  out.unit_points.resize(unit_count);
  for (std::size_t k = 0; k < unit_count; ++k) {
    for (std::size_t i = 0; i < regions[k].size(); ++i) {
      if (regions[k][i]) {
        out.unit_points[k].push_back(static_cast<std::uint32_t>(i));
        in_unit[i] = 1;
      }
    }
  }
  for (std::size_t i = 0; i < scene.pixel_count(); ++i) {
    if (scene.valid[i] && !in_unit[i]) out.static_points.push_back(static_cast<std::uint32_t>(i));
  }

  out.true_extrinsics = camera_curve(config);

  auto world = TrajectoryField::static_scene(scene, frames, TrajectoryFrame::World);
  out.true_unit_rigids.resize(unit_count);
  out.true_residuals.resize(unit_count);
  for (std::size_t k = 0; k < unit_count; ++k) {
    const UnitConfig& uc = config.units[k];
    const auto& pts = out.unit_points[k];
    const Eigen::Vector3d velocity = uc.velocity.value_or(random_direction(rng, 0.3) * config.unit_step);
    const Eigen::Vector3d spin = uc.angular_velocity.value_or(random_direction(rng, 1.0) * 2.0 * config.unit_step);
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    for (auto i : pts) center += scene.points[i];
    center /= static_cast<double>(pts.size());

    auto& rigids = out.true_unit_rigids[k];
    rigids.assign(frames, RigidTransform::identity());
    for (std::size_t t = 1; t < frames; ++t) {
      const double s = static_cast<double>(t);
      switch (uc.family) {
        case MotionFamily::Static: break;
        case MotionFamily::Translation: rigids[t] = RigidTransform::from_translation(s * velocity); break;
        case MotionFamily::Rotation:
          rigids[t] = about_point(center, RigidTransform::from_axis_angle(s * spin));
          break;
        case MotionFamily::Screw:
        case MotionFamily::RigidSinusoidal: {
          const Eigen::Vector3d along = spin.normalized() * velocity.norm() * s;
          rigids[t] = compose(RigidTransform::from_translation(along),
                              about_point(center, RigidTransform::from_axis_angle(s * spin)));
          break;
        }
      }
    }

    auto& residual = out.true_residuals[k];
    residual.assign(frames * pts.size(), Point3::Zero());
    if (uc.family == MotionFamily::RigidSinusoidal) {
      std::vector<Point3> local;
      for (auto i : pts) local.push_back(scene.points[i] - center);
      const auto g = affine_free_residual(local, config.frames, config.residual_amplitude, uniform(rng, 0.0, 3.0));
      for (std::size_t t = 1; t < frames; ++t) {
        for (std::size_t j = 0; j < pts.size(); ++j) {
          residual[t * pts.size() + j] = rigids[t].rotation * g[t * pts.size() + j];
        }
      }
    }
    for (std::size_t t = 1; t < frames; ++t) {
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const auto i = pts[j];
        world.at(t, i) = rigids[t](scene.points[i]) + residual[t * pts.size() + j];
      }
    }
  }
  out.world_traj = world;
  out.camera_traj = to_camera(world, out.true_extrinsics);

  // Observation model.
  out.observed_tracks = out.camera_traj;
  auto& obs = out.observed_tracks;
  std::vector<std::uint32_t> shuffled = out.static_points;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto outliers = static_cast<std::size_t>(std::llround(config.outlier_fraction * static_cast<double>(shuffled.size())));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t t = 1; t < frames; ++t) {
    if (config.noise_sigma > 0.0) {
      for (std::size_t i = 0; i < obs.point_count; ++i) {
        if (!obs.is_valid(t, i)) continue;
        obs.at(t, i) += config.noise_sigma * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
      }
    }
    for (std::size_t o = 0; o < outliers; ++o) {
      obs.at(t, shuffled[o]) += config.outlier_magnitude * random_direction(rng, 1.0);
    }
    if (config.dropout_fraction > 0.0) {
      for (std::size_t i = 0; i < obs.point_count; ++i) {
        if (obs.is_valid(t, i) && uniform(rng, 0.0, 1.0) < config.dropout_fraction) obs.valid[obs.index(t, i)] = 0;
      }
    }
  }

  // Color image: background gradient, units and segments in their preview colors.
  out.image = Image{w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      std::uint8_t* px = out.image.at(u, v);
      px[0] = static_cast<std::uint8_t>(40 + 150 * u / w);
      px[1] = static_cast<std::uint8_t>(40 + 150 * v / h);
      px[2] = 120;
      for (std::size_t r = 0; r < region_count; ++r) {
        if (!regions[r].at(u, v)) continue;
        const Rgb c = r < unit_count ? unit_color(static_cast<int>(r) + 1) : Rgb{90, 90, 90};
        px[0] = c[0];
        px[1] = c[1];
        px[2] = c[2];
      }
    }
  }
  return out;
}

namespace {

nlohmann::json pose_json(const RigidTransform& t) {
  const auto aa = t.axis_angle();
  return {{"rotation", {aa.x(), aa.y(), aa.z()}}, {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

}  // namespace

void write_synthetic(const SyntheticScene& synth, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& k = synth.scene.intrinsics;
  write_png(dir / "image.png", synth.image);

  Grid<float> depth(synth.scene.width(), synth.scene.height());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    depth[i] = synth.scene.valid[i] ? static_cast<float>(synth.scene.depth[i]) : std::numeric_limits<float>::quiet_NaN();
  }
  write_depth(dir / "depth.dpth", depth);

  const auto categories = assign_categories(synth.unit_masks.size(), synth.seed);
  nlohmann::json manifest{{"image", "image.png"},
                          {"depth", "depth.dpth"},
                          {"intrinsics", {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}}},
                          {"normalize", false},
                          {"units", nlohmann::json::array()},
                          {"segments", nlohmann::json::array()}};
  for (std::size_t u = 0; u < synth.unit_masks.size(); ++u) {
    const std::string name = "unit_" + std::to_string(u + 1) + ".png";
    write_png(dir / name, image_from_mask(synth.unit_masks[u]));
    manifest["units"].push_back({{"mask", name}, {"category", std::string(to_string(categories[u]))}});
  }
  for (std::size_t s = 0; s < synth.segments.size(); ++s) {
    const std::string name = "segment_" + std::to_string(s) + ".png";
    write_png(dir / name, image_from_mask(synth.segments[s]));
    manifest["segments"].push_back(name);
  }
  write_file(dir / "scene.json", manifest.dump(2) + "\n");

  // Ground truth as a script: one keyframe per frame.
  MotionScript script;
  script.frames = synth.config.frames;
  const auto frames = static_cast<std::size_t>(synth.config.frames);
  auto as_key = [](int frame, const RigidTransform& t) { return PoseKey{frame, t.axis_angle(), t.translation}; };
  for (std::size_t t = 1; t < frames; ++t) script.camera.push_back(as_key(static_cast<int>(t), synth.true_extrinsics[t]));
  nlohmann::json truth_units = nlohmann::json::array();
  for (std::size_t u = 0; u < synth.unit_masks.size(); ++u) {
    const auto& pts = synth.unit_points[u];
    const std::vector<std::uint8_t> valid(frames * pts.size(), 1);
    UnitScript entry;
    std::vector<Point3> offsets = synth.true_residuals[u];
    if (categories[u] == Category::Brush) {
      for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t j = 0; j < pts.size(); ++j) {
          offsets[t * pts.size() + j] = synth.world_traj.at(t, pts[j]) - synth.scene.points[pts[j]];
        }
      }
    } else {
      std::vector<PoseKey> keys;
      for (std::size_t t = 1; t < frames; ++t) keys.push_back(as_key(static_cast<int>(t), synth.true_unit_rigids[u][t]));
      entry.rigid = std::move(keys);
    }
    const auto strength = motion_strength(offsets, valid, frames, pts.size()).values;
    StrengthSpec spec;
    for (std::size_t t = 1; t < frames; ++t) spec.keys.push_back(ScalarKey{static_cast<int>(t), strength[t]});
    entry.strength = spec;
    script.units.emplace(static_cast<int>(u) + 1, std::move(entry));

    nlohmann::json rigids = nlohmann::json::array();
    for (const auto& r : synth.true_unit_rigids[u]) rigids.push_back(pose_json(r));
    truth_units.push_back({{"unit", u + 1},
                           {"family", std::string(to_string(synth.config.units[u].family))},
                           {"category", std::string(to_string(categories[u]))},
                           {"rigid", rigids},
                           {"strength", strength}});
  }
  write_file(dir / "script.json", to_json(script).dump(2) + "\n");

  write_tracks(dir / "tracks_camera.trck", synth.camera_traj);
  write_tracks(dir / "tracks_world.trck", synth.world_traj);
  write_tracks(dir / "tracks_observed.trck", synth.observed_tracks);

  nlohmann::json extrinsics = nlohmann::json::array();
  for (const auto& e : synth.true_extrinsics) extrinsics.push_back(pose_json(e));
  const nlohmann::json truth{{"config", to_json(synth.config)}, {"extrinsics", extrinsics}, {"units", truth_units}};
  write_file(dir / "truth.json", truth.dump(2) + "\n");
}

}  // namespace motionforge
