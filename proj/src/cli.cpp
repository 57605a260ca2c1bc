// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "motionforge/compose.hpp"
#include "motionforge/errors.hpp"
#include "motionforge/metrics.hpp"
#include "motionforge/pipeline.hpp"
#include "motionforge/preview.hpp"
#include "motionforge/service.hpp"
#include "parallel.hpp"

namespace motionforge::cli {

namespace {

void setup_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("motionforge");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("MOTIONFORGE_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

std::string flag_value(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

// Keys of a --config JSON object become flags of the chosen subcommand unless
// given on the command line. A "synthetic" object is left for synth.
std::vector<std::string> merge_config(std::vector<std::string> args, nlohmann::json& config) {
  auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end() || it + 1 == args.end()) return args;
  config = read_json(*(it + 1));
  if (!config.is_object()) throw Error(ErrorCode::InvalidConfig, "--config must hold a JSON object");
  args.erase(it, it + 2);
  for (const auto& [key, value] : config.items()) {
    if (key == "synthetic") continue;
    const std::string flag = "--" + key;
    if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    args.push_back(flag_value(value));
  }
  return args;
}

struct ComposeArgs {
  std::string scene, script, out, sidecar;
  int frames = 0;
};

int do_compose(const ComposeArgs& a, std::ostream& out) {
  const LoadedScene loaded = load_manifest(std::filesystem::path(a.scene));
  const UnitPartition partition = loaded.partition();
  MotionScript script;
  if (!a.script.empty()) script = script_from_json(read_json(a.script));
  if (a.frames > 0) script.frames = a.frames;
  const ControlTensor tensor = compose(loaded.scene, partition, script);
  write_tensor(tensor, a.out);
  if (!a.sidecar.empty()) write_file(a.sidecar, tensor_sidecar(tensor, partition).dump(2) + "\n");
  spdlog::info("wrote {} ({} x 5 x {} x {})", a.out, tensor.frames(), tensor.height(), tensor.width());
  out << a.out << '\n';
  return kExitOk;
}

struct PipelineArgs {
  std::string scene, tracks, out, provenance, sidecar, batch;
  std::uint64_t seed = 0;
  double threshold = 0.02;
};

int do_pipeline(const PipelineArgs& a, std::ostream& out);

// Batch manifest: {"output_dir": dir, "scenes": [{"scene", "tracks", "seed"?, "name"?}]}.
// Relative paths resolve against the batch file; scenes run concurrently.
int do_batch(const PipelineArgs& a, std::ostream& out) {
  const std::filesystem::path batch_path = a.batch;
  const nlohmann::json batch = read_json(batch_path);
  const auto base = batch_path.parent_path();
  const auto resolve = [&base](const std::string& p) { return std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p; };
  const auto out_dir = resolve(batch.at("output_dir").get<std::string>());
  std::filesystem::create_directories(out_dir);
  const auto& scenes = batch.at("scenes");
  std::vector<PipelineArgs> jobs;
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    const auto& s = scenes.at(k);
    PipelineArgs job = a;
    job.batch.clear();
    job.scene = resolve(s.at("scene").get<std::string>()).string();
    job.tracks = resolve(s.at("tracks").get<std::string>()).string();
    job.seed = s.value("seed", a.seed);
    const std::string name = s.value("name", "sample_" + std::to_string(k));
    job.out = (out_dir / (name + ".ctrl")).string();
    job.provenance = (out_dir / (name + ".provenance.json")).string();
    job.sidecar = (out_dir / (name + ".json")).string();
    jobs.push_back(std::move(job));
  }
  std::vector<std::ostringstream> logs(jobs.size());
  detail::for_each_index(jobs.size(), Exec::Parallel, [&](std::size_t k) { do_pipeline(jobs[k], logs[k]); });
  for (const auto& l : logs) out << l.str();
  return kExitOk;
}

int do_pipeline(const PipelineArgs& a, std::ostream& out) {
  if (!a.batch.empty()) return do_batch(a, out);
  const LoadedScene loaded = load_manifest(std::filesystem::path(a.scene));
  const TrajectoryField tracks = scaled(read_tracks(a.tracks), loaded.scene.scale);
  PipelineOptions options;
  options.threshold_ratio = a.threshold;
  const TrainingSample sample = build_training_sample(loaded.scene, loaded.segments, tracks, a.seed, options);
  write_tensor(sample.tensor, a.out);
  const std::string prov = a.provenance.empty() ? a.out + ".provenance.json" : a.provenance;
  write_file(prov, to_json(sample.provenance).dump(2) + "\n");
  if (!a.sidecar.empty()) write_file(a.sidecar, tensor_sidecar(sample.tensor, sample.partition).dump(2) + "\n");
  spdlog::info("pipeline selected {} units", sample.partition.unit_count() - 1);
  out << a.out << '\n';
  return kExitOk;
}

struct PreviewArgs {
  std::string tensor, out, background;
  int frame = -1, from = 0, to = -1, stride = 1;
};

int do_preview(const PreviewArgs& a, std::ostream& out) {
  const ControlTensor tensor = read_tensor(a.tensor);
  int from = a.from;
  int to = a.to < 0 ? tensor.frames() - 1 : a.to;
  if (a.frame >= 0) from = to = a.frame;
  std::optional<Image> background;
  if (!a.background.empty()) background = read_image(a.background);
  std::filesystem::create_directories(a.out);
  for (int t = from; t <= to; ++t) {
    const PreviewFrame p = render_preview(tensor, t, a.stride);
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d", t);
    const auto base = std::filesystem::path(a.out) / name;
    write_file(base.string() + ".json", to_json(p).dump() + "\n");
    write_png(base.string() + ".png", rasterize_preview(p, background ? &*background : nullptr));
  }
  out << a.out << '\n';
  return kExitOk;
}

struct MetricsArgs {
  std::string gen, ref, mask, scene, out, csv;
  double threshold = 1.0;
};

int do_metrics(const MetricsArgs& a, std::ostream& out) {
  std::optional<CameraIntrinsics> k;
  if (!a.scene.empty()) k = load_manifest(std::filesystem::path(a.scene)).scene.intrinsics;
  const Tracks2D gen = tracks_to_2d(read_tracks(a.gen), k);
  const Tracks2D ref = tracks_to_2d(read_tracks(a.ref), k);
  std::optional<Mask> mask;
  if (!a.mask.empty()) mask = read_mask(a.mask);
  EvalInputs in;
  in.generated = &gen;
  in.reference = &ref;
  in.mask = mask ? &*mask : nullptr;
  in.threshold_px = a.threshold;
  const EvalReport report = evaluate(in);
  const std::string text = to_json(report).dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_file(a.out, text);
  }
  if (!a.csv.empty()) write_file(a.csv, to_csv(report));
  return kExitOk;
}

struct SynthArgs {
  std::string out, camera, units;
  std::uint64_t seed = 0;
  int width = 704, height = 448, frames = 24, border = -1;
  double noise = -1.0, outliers = -1.0;
};

int do_synth(const SynthArgs& a, const nlohmann::json& config, std::ostream& out) {
  SyntheticConfig c = config.contains("synthetic") ? synthetic_config_from_json(config.at("synthetic")) : SyntheticConfig{};
  c.seed = a.seed;
  c.width = a.width;
  c.height = a.height;
  c.frames = a.frames;
  if (!a.camera.empty()) c.camera = camera_family_from_string(a.camera);
  if (!a.units.empty()) {
    c.units.clear();
    std::stringstream list(a.units);
    std::string family;
    while (std::getline(list, family, ',')) c.units.push_back(UnitConfig{motion_family_from_string(family), {}, {}});
  }
  if (a.border >= 0) c.invalid_border = a.border;
  if (a.noise >= 0.0) c.noise_sigma = a.noise;
  if (a.outliers >= 0.0) c.outlier_fraction = a.outliers;
  write_synthetic(generate_synthetic(c), a.out);
  out << a.out << '\n';
  return kExitOk;
}

struct ServeArgs {
  std::string host = "127.0.0.1", state_dir;
  int port = service::kDefaultPort;
};

int do_serve(const ServeArgs& a, std::ostream& out) {
  std::optional<std::filesystem::path> dir;
  if (!a.state_dir.empty()) dir = a.state_dir;
  service::SessionStore store(dir);
  service::Server server(store);
  const int port = server.bind(a.host, a.port);
  if (port < 0) throw Error(ErrorCode::UnreadableFile, "cannot bind " + a.host + ":" + std::to_string(a.port));
  out << "listening on " << a.host << ':' << port << std::endl;
  spdlog::info("serving {} sessions from {}", store.ids().size(), a.state_dir.empty() ? "memory" : a.state_dir);
  return server.run() ? kExitOk : kExitIo;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  setup_logging();
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> args;
  try {
    args = merge_config(raw_args, config);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return is_io_error(e.code()) ? kExitIo : kExitValidation;
  }

  CLI::App app{"Disentangled motion control signals: compose, preview, evaluate.", "motionforge"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  app.add_option("--config", "JSON file whose keys override flag defaults");

  ComposeArgs ca;
  auto* compose_cmd = app.add_subcommand("compose", "scene manifest + script -> CTRL tensor");
  compose_cmd->add_option("--scene", ca.scene, "scene manifest")->required();
  compose_cmd->add_option("--script", ca.script, "motion script (identity when absent)");
  compose_cmd->add_option("--out", ca.out, "output tensor")->required();
  compose_cmd->add_option("--sidecar", ca.sidecar, "sidecar JSON path");
  compose_cmd->add_option("--frames", ca.frames, "override the script frame count");

  PipelineArgs pa;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "scene + tracks + segments -> tensor + provenance");
  auto* batch_opt = pipeline_cmd->add_option("--batch", pa.batch, "batch manifest (replaces --scene/--tracks/--out)");
  pipeline_cmd->add_option("--scene", pa.scene, "scene manifest with segments")->excludes(batch_opt);
  pipeline_cmd->add_option("--tracks", pa.tracks, "camera-frame TRCK tracks")->excludes(batch_opt);
  pipeline_cmd->add_option("--out", pa.out, "output tensor")->excludes(batch_opt);
  pipeline_cmd->add_option("--provenance", pa.provenance, "provenance JSON path");
  pipeline_cmd->add_option("--sidecar", pa.sidecar, "sidecar JSON path");
  pipeline_cmd->add_option("--seed", pa.seed, "category coin seed");
  pipeline_cmd->add_option("--threshold", pa.threshold, "dynamic threshold as a share of median depth");

  PreviewArgs va;
  auto* preview_cmd = app.add_subcommand("preview", "tensor -> per-frame point sets (JSON + PNG)");
  preview_cmd->add_option("--tensor", va.tensor, "CTRL tensor")->required();
  preview_cmd->add_option("--out", va.out, "output directory")->required();
  preview_cmd->add_option("--frame", va.frame, "single frame");
  preview_cmd->add_option("--from", va.from, "first frame");
  preview_cmd->add_option("--to", va.to, "last frame");
  preview_cmd->add_option("--stride", va.stride, "grid subsampling");
  preview_cmd->add_option("--background", va.background, "image drawn under the points");

  MetricsArgs ma;
  auto* metrics_cmd = app.add_subcommand("metrics", "generated vs reference tracks -> report");
  metrics_cmd->add_option("--gen", ma.gen, "generated TRCK tracks")->required();
  metrics_cmd->add_option("--ref", ma.ref, "reference TRCK tracks")->required();
  metrics_cmd->add_option("--mask", ma.mask, "user mask PNG (restricts msc, enables iou)");
  metrics_cmd->add_option("--scene", ma.scene, "scene manifest whose intrinsics project the tracks");
  metrics_cmd->add_option("--threshold", ma.threshold, "moving threshold in pixels");
  metrics_cmd->add_option("--out", ma.out, "report JSON (stdout when absent)");
  metrics_cmd->add_option("--csv", ma.csv, "per-frame CSV");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "synthetic scene with ground truth");
  synth_cmd->add_option("--out", sa.out, "output directory")->required();
  synth_cmd->add_option("--seed", sa.seed, "generator seed");
  synth_cmd->add_option("--width", sa.width, "image width");
  synth_cmd->add_option("--height", sa.height, "image height");
  synth_cmd->add_option("--frames", sa.frames, "frame count");
  synth_cmd->add_option("--camera", sa.camera, "static, orbit, dolly or pan");
  synth_cmd->add_option("--units", sa.units, "comma-separated unit motion families");
  synth_cmd->add_option("--border", sa.border, "invalid-depth border width");
  synth_cmd->add_option("--noise", sa.noise, "track noise sigma");
  synth_cmd->add_option("--outliers", sa.outliers, "share of static points with gross errors");

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP authoring service");
  serve_cmd->add_option("--port", sv.port, "listen port");
  serve_cmd->add_option("--host", sv.host, "listen address");
  serve_cmd->add_option("--state-dir", sv.state_dir, "patch-log directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*compose_cmd) return do_compose(ca, out);
    if (*pipeline_cmd) {
      if (pa.batch.empty() && (pa.scene.empty() || pa.tracks.empty() || pa.out.empty())) {
        err << "pipeline needs --scene, --tracks and --out, or --batch\n\n" << pipeline_cmd->help();
        return kExitValidation;
      }
      return do_pipeline(pa, out);
    }
    if (*preview_cmd) return do_preview(va, out);
    if (*metrics_cmd) return do_metrics(ma, out);
    if (*synth_cmd) return do_synth(sa, config, out);
    if (*serve_cmd) return do_serve(sv, out);
  } catch (const Error& e) {
    err << "error";
    if (!e.stage.empty()) err << " [" << e.stage << "]";
    err << ": " << e.what() << '\n';
    return is_io_error(e.code()) ? kExitIo : kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace motionforge::cli
