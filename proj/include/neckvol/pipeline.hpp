#pragma once

// End-to-end two-view pipeline: frames -> preprocessed frames -> merged
// cloud -> measurement report.

#include <chrono>
#include <ctime>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "neckvol/config.hpp"
#include "neckvol/filtering.hpp"
#include "neckvol/phantom.hpp"
#include "neckvol/pgm_io.hpp"
#include "neckvol/reconstruct.hpp"
#include "neckvol/registration.hpp"
#include "neckvol/volumetry.hpp"

namespace neckvol {

struct PreprocessResult {
  DepthFrame frame;
  std::size_t replaced = 0;
  std::vector<std::size_t> unrepaired_columns;
};

/// Average, repair column outliers, mask the background and (optionally)
/// round to whole millimeters.
inline PreprocessResult preprocess_view(std::span<const DepthFrame> frames, const PipelineConfig& cfg) {
  const auto avg = average_frames(frames);
  if (avg.mm_per_pixel() != cfg.mm_per_pixel) {
    throw Error(Errc::parameter_mismatch, "frame scale differs from the configured mm_per_pixel");
  }
  auto filled = fill_outliers(avg, cfg.outlier_config());
  auto masked = mask_background(filled.frame, cfg.near_mm, cfg.far_mm);
  if (cfg.quantize_mm) masked = quantize_mm(masked);
  return {std::move(masked), filled.replaced, std::move(filled.unrepaired_columns)};
}

struct Reconstruction {
  PointCloud front;  // denoised
  PointCloud back;   // denoised, aligned to the front frame
  PointCloud merged;
  int shift_row = 0;
  int shift_col = 0;
  double align_score = 0.0;
};

/// Preprocessed front/back frames to denoised view clouds (no merge).
inline Reconstruction view_clouds(const DepthFrame& front, const DepthFrame& back, const PipelineConfig& cfg) {
  const auto aligned = align_back_to_front(front, back, cfg.align_options());
  Reconstruction rec;
  rec.front = denoise_cloud(frame_to_cloud(front, ViewTag::front), cfg.denoise_config());
  rec.back = denoise_cloud(frame_to_cloud(aligned.aligned, ViewTag::back), cfg.denoise_config());
  rec.shift_row = aligned.shift_row;
  rec.shift_col = aligned.shift_col;
  rec.align_score = aligned.score;
  return rec;
}

inline Reconstruction reconstruct(const DepthFrame& front, const DepthFrame& back, const PipelineConfig& cfg) {
  auto rec = view_clouds(front, back, cfg);
  rec.merged = merge_front_back(rec.front, rec.back, cfg.merge_options());
  return rec;
}

struct MeasurementReport {
  double volume_liters = 0.0;
  NeckBounds bounds;
  AreaProfile profile;  // degenerate interior slices already interpolated
  PipelineConfig parameters;
  std::optional<std::string> timestamp;
  std::string session_id;
  bool degenerate_warning = false;
};

/// Slice-area profile, neck minimum, bounds and volume of a merged cloud.
/// Slab boundaries sit half a pixel above the cloud's row grid so each slab
/// holds whole image rows.
inline MeasurementReport measure_volume(const PointCloud& merged, const PipelineConfig& cfg) {
  cfg.validate();
  const auto raw = area_profile(merged, cfg.dy_mm, 0.5 * cfg.mm_per_pixel);
  MeasurementReport rep;
  rep.profile = fill_degenerate(raw);
  const auto min_index = find_neck_minimum(rep.profile);
  rep.bounds = neck_bounds(rep.profile, min_index, cfg.prominence_fraction);
  const auto vol = neck_volume(rep.profile, rep.bounds);
  rep.volume_liters = vol.liters;
  rep.degenerate_warning = vol.degenerate_warning;
  rep.parameters = cfg;
  return rep;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Frame stacks of both views to a report.
inline MeasurementReport run_pipeline(std::span<const DepthFrame> front_frames, std::span<const DepthFrame> back_frames,
                                      const PipelineConfig& cfg) {
  cfg.validate();
  const auto f = preprocess_view(front_frames, cfg);
  const auto b = preprocess_view(back_frames, cfg);
  const auto rec = reconstruct(f.frame, b.frame, cfg);
  return measure_volume(rec.merged, cfg);
}

/// Gap for a phantom: the pipeline is run on a noiseless render and the
/// gap is set so the neck cylinder's merged depth equals its diameter.
inline double calibrate_phantom_gap(PhantomSpec spec, const RenderConfig& render_cfg, const PipelineConfig& cfg) {
  spec.noise_sigma_mm = 0.0;
  spec.spike_rate = 0.0;
  spec.bump.reset();
  const std::vector<DepthFrame> front{render(spec, View::front, render_cfg)};
  const std::vector<DepthFrame> back{render(spec, View::back, render_cfg)};
  const auto f = preprocess_view(front, cfg);
  const auto b = preprocess_view(back, cfg);
  const auto rec = view_clouds(f.frame, b.frame, cfg);
  // Neck band in cloud coordinates (y = -row * s), away from both ends.
  const double s = render_cfg.mm_per_pixel;
  const double top = -static_cast<double>(render_cfg.neck_top_row) * s;
  const double h = spec.neck_height_mm;
  return calibrate_gap(rec.front, rec.back, spec.neck_radius_mm, top - 0.75 * h, top - 0.25 * h, cfg.plane_fraction);
}

// JSON forms. Every document carries schema_version.

inline nlohmann::json profile_json(const AreaProfile& p) {
  return {{"dy_mm", p.dy_mm}, {"slice_centers_mm", p.slice_centers}, {"areas_dm2", p.areas},
          {"degenerate", p.degenerate}};
}

inline nlohmann::json bounds_json(const NeckBounds& b) {
  return {{"min_index", b.min_index},
          {"start_index", b.start_index},
          {"end_index", b.end_index},
          {"prominence_fraction", b.prominence_fraction},
          {"prominence_dm2", b.prominence},
          {"cut_level_dm2", b.cut_level}};
}

inline nlohmann::json report_json(const MeasurementReport& r) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["volume_liters"] = r.volume_liters;
  j["bounds"] = bounds_json(r.bounds);
  j["profile"] = profile_json(r.profile);
  j["parameters"] = r.parameters;
  j["timestamp"] = r.timestamp ? nlohmann::json(*r.timestamp) : nlohmann::json(nullptr);
  j["session_id"] = r.session_id;
  j["degenerate_warning"] = r.degenerate_warning;
  return j;
}

inline MeasurementReport report_from_json(const nlohmann::json& j) {
  try {
    MeasurementReport r;
    r.volume_liters = j.at("volume_liters").get<double>();
    const auto& b = j.at("bounds");
    r.bounds.min_index = b.at("min_index").get<std::size_t>();
    r.bounds.start_index = b.at("start_index").get<std::size_t>();
    r.bounds.end_index = b.at("end_index").get<std::size_t>();
    r.bounds.prominence_fraction = b.at("prominence_fraction").get<double>();
    r.bounds.prominence = b.at("prominence_dm2").get<double>();
    r.bounds.cut_level = b.at("cut_level_dm2").get<double>();
    const auto& p = j.at("profile");
    r.profile.dy_mm = p.at("dy_mm").get<double>();
    r.profile.slice_centers = p.at("slice_centers_mm").get<std::vector<double>>();
    r.profile.areas = p.at("areas_dm2").get<std::vector<double>>();
    r.profile.degenerate = p.at("degenerate").get<std::vector<bool>>();
    r.parameters = j.at("parameters").get<PipelineConfig>();
    if (!j.at("timestamp").is_null()) r.timestamp = j.at("timestamp").get<std::string>();
    r.session_id = j.at("session_id").get<std::string>();
    r.degenerate_warning = j.at("degenerate_warning").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_file, std::string("report: ") + e.what());
  }
}

}  // namespace neckvol
