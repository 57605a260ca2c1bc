// Copyright 2026 The MotionForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionforge/metrics.hpp"

#include <sstream>

#include "motionforge/errors.hpp"
#include "parallel.hpp"

namespace motionforge {

Tracks2D Tracks2D::make(std::size_t frames, std::size_t points) {
  Tracks2D t;
  t.frames = frames;
  t.points = points;
  t.positions.assign(frames * points, Pixel::Zero());
  t.valid.assign(frames * points, 1);
  return t;
}

Tracks2D tracks_to_2d(const TrajectoryField& field, const std::optional<CameraIntrinsics>& k) {
  Tracks2D out = Tracks2D::make(field.frame_count, field.point_count);
  for (std::size_t i = 0; i < out.positions.size(); ++i) {
    const Point3& p = field.positions[i];
    out.valid[i] = field.valid[i];
    if (!k) {
      out.positions[i] = p.head<2>();
    } else if (auto px = try_project(*k, p)) {
      out.positions[i] = *px;
    } else {
      out.valid[i] = 0;
    }
  }
  return out;
}

namespace {

void check_shape(const Tracks2D& t) {
  if (t.positions.size() != t.frames * t.points || t.valid.size() != t.frames * t.points) {
    throw Error(ErrorCode::ShapeMismatch, "track buffers do not match T x N");
  }
}

}  // namespace

std::vector<double> objmc_per_frame(const Tracks2D& gen, const Tracks2D& ref) {
  check_shape(gen);
  check_shape(ref);
  if (gen.frames != ref.frames || gen.points != ref.points) {
    throw Error(ErrorCode::ShapeMismatch, "generated " + std::to_string(gen.frames) + "x" + std::to_string(gen.points) +
                                              " vs reference " + std::to_string(ref.frames) + "x" +
                                              std::to_string(ref.points));
  }
  std::vector<double> out(gen.frames, 0.0);
  for (std::size_t t = 0; t < gen.frames; ++t) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < gen.points; ++i) {
      if (!gen.is_valid(t, i) || !ref.is_valid(t, i)) continue;
      sum += (gen.at(t, i) - ref.at(t, i)).norm();
      ++n;
    }
    out[t] = n ? sum / static_cast<double>(n) : 0.0;
  }
  return out;
}

double objmc(const Tracks2D& gen, const Tracks2D& ref) {
  objmc_per_frame(gen, ref);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < gen.positions.size(); ++k) {
    if (!gen.valid[k] || !ref.valid[k]) continue;
    sum += (gen.positions[k] - ref.positions[k]).norm();
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoValidSamples, "no sample is valid in both track sets");
  return sum / static_cast<double>(n);
}

namespace {

struct Sums {
  std::vector<double> sum;
  std::vector<std::size_t> count;
};

Sums msc_sums(const Tracks2D& tracks, const Mask* mask) {
  check_shape(tracks);
  if (mask && mask->size() != tracks.points) {
    throw Error(ErrorCode::DimensionMismatch, "mask has " + std::to_string(mask->size()) + " pixels for " +
                                                  std::to_string(tracks.points) + " tracks");
  }
  Sums s{std::vector<double>(tracks.frames, 0.0), std::vector<std::size_t>(tracks.frames, 0)};
  for (std::size_t t = 1; t < tracks.frames; ++t) {
    for (std::size_t i = 0; i < tracks.points; ++i) {
      if (mask && !(*mask)[i]) continue;
      if (!tracks.is_valid(t, i) || !tracks.is_valid(t - 1, i)) continue;
      s.sum[t] += (tracks.at(t, i) - tracks.at(t - 1, i)).norm();
      ++s.count[t];
    }
  }
  return s;
}

}  // namespace

std::vector<double> msc_per_frame(const Tracks2D& tracks, const Mask* mask) {
  const Sums s = msc_sums(tracks, mask);
  std::vector<double> out(tracks.frames, 0.0);
  for (std::size_t t = 1; t < tracks.frames; ++t) {
    if (s.count[t]) out[t] = s.sum[t] / static_cast<double>(s.count[t]);
  }
  return out;
}

double msc(const Tracks2D& tracks, const Mask* mask) {
  const Sums s = msc_sums(tracks, mask);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 1; t < tracks.frames; ++t) {
    sum += s.sum[t];
    n += s.count[t];
  }
  if (n == 0) throw Error(ErrorCode::NoValidSamples, "no point is valid on two consecutive frames");
  return sum / static_cast<double>(n);
}

Mask moving_set(const Tracks2D& tracks, int width, int height, double threshold_px) {
  check_shape(tracks);
  if (tracks.points != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(tracks.points) + " tracks for a " +
                                                  std::to_string(width) + "x" + std::to_string(height) + " grid");
  }
  Mask out(width, height);
  for (std::size_t i = 0; i < tracks.points; ++i) {
    if (tracks.frames == 0 || !tracks.is_valid(0, i)) continue;
    for (std::size_t t = 1; t < tracks.frames; ++t) {
      if (tracks.is_valid(t, i) && (tracks.at(t, i) - tracks.at(0, i)).norm() > threshold_px) {
        out[i] = 1;
        break;
      }
    }
  }
  return out;
}

double motion_iou(const Tracks2D& tracks, const Mask& mask, double threshold_px) {
  const Mask moving = moving_set(tracks, mask.width(), mask.height(), threshold_px);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const bool a = moving[i] != 0;
    const bool b = mask[i] != 0;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

EvalReport evaluate(const EvalInputs& in) {
  if (!in.generated || !in.reference) throw Error(ErrorCode::InvalidConfig, "evaluation needs both track sets");
  EvalReport r;
  r.threshold_px = in.threshold_px;
  r.objmc = objmc(*in.generated, *in.reference);
  r.objmc_per_frame = objmc_per_frame(*in.generated, *in.reference);
  r.msc = msc(*in.generated, in.mask);
  r.msc_per_frame = msc_per_frame(*in.generated, in.mask);
  if (in.mask) r.iou = motion_iou(*in.generated, *in.mask, in.threshold_px);
  return r;
}

std::vector<EvalReport> evaluate_batch(std::span<const EvalInputs> samples, Exec exec) {
  std::vector<EvalReport> out(samples.size());
  detail::for_each_index(samples.size(), exec, [&](std::size_t k) { out[k] = evaluate(samples[k]); });
  return out;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["conventions"] = {{"objmc", "mean pixel distance over samples valid in both track sets"},
                      {"msc", "mean pixel displacement per frame over t >= 1, raw pixels/frame, mask-restricted"},
                      {"iou", "moving = max displacement from frame 0 > threshold_px"}};
  j["objmc"] = r.objmc;
  j["msc"] = r.msc;
  j["iou"] = r.iou ? nlohmann::json(*r.iou) : nlohmann::json(nullptr);
  j["threshold_px"] = r.threshold_px;
  j["per_frame"] = {{"objmc", r.objmc_per_frame}, {"msc", r.msc_per_frame}};
  return j;
}

std::string to_csv(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "frame,objmc,msc\n";
  for (std::size_t t = 0; t < r.objmc_per_frame.size(); ++t) {
    out << t << ',' << r.objmc_per_frame[t] << ',' << (t < r.msc_per_frame.size() ? r.msc_per_frame[t] : 0.0) << '\n';
  }
  return out.str();
}

}  // namespace motionforge
