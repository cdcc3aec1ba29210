#pragma once

// Every tunable of the pipeline in one value, with a JSON file form.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "neckvol/circumference.hpp"
#include "neckvol/error.hpp"
#include "neckvol/filtering.hpp"
#include "neckvol/reconstruct.hpp"
#include "neckvol/registration.hpp"

namespace neckvol {

inline constexpr int kSchemaVersion = 1;

struct PipelineConfig {
  // filtering
  int window = 9;
  double mad_k = 1.4826;
  double sigmas = 3.0;
  int knn = 8;
  double denoise_sigmas = 6.0;
  double near_mm = 500.0;
  double far_mm = 1500.0;
  // Round preprocessed frames to whole millimeters, as a 16-bit sensor
  // frame would be; keeps the file-based route identical to the one-shot.
  bool quantize_mm = true;
  // registration
  int max_shift_px = 20;
  // reconstruct
  double gap_mm = 0.0;
  double plane_fraction = 0.002;
  // volumetry
  double dy_mm = 5.0;
  double prominence_fraction = 0.5;
  // circumference
  int smoothing_window = 11;
  double end_threshold = 0.25;
  bool interpolate_edges = false;
  // capture
  double mm_per_pixel = 1.0;

  OutlierFillConfig outlier_config() const { return {window, mad_k, sigmas}; }
  DenoiseConfig denoise_config() const { return {knn, denoise_sigmas}; }
  MergeOptions merge_options() const { return {gap_mm, plane_fraction}; }
  AlignOptions align_options() const { return {max_shift_px}; }
  CircumferenceOptions circumference_options() const {
    return {RefineOptions{interpolate_edges}, end_threshold, smoothing_window};
  }

  void validate() const {
    outlier_config().validate();
    denoise_config().validate();
    if (!(near_mm > 0.0 && near_mm < far_mm)) throw Error(Errc::invalid_argument, "need 0 < near_mm < far_mm");
    if (max_shift_px < 0) throw Error(Errc::invalid_argument, "max_shift_px must be >= 0");
    if (!(gap_mm >= 0.0)) throw Error(Errc::invalid_gap, "gap_mm must be >= 0");
    if (!(plane_fraction >= 0.0 && plane_fraction <= 1.0)) throw Error(Errc::invalid_argument, "plane_fraction in [0, 1]");
    if (!(dy_mm > 0.0)) throw Error(Errc::invalid_argument, "dy_mm must be > 0");
    if (!(prominence_fraction > 0.0 && prominence_fraction <= 1.0)) {
      throw Error(Errc::invalid_argument, "prominence_fraction must be in (0, 1]");
    }
    if (smoothing_window < 1 || smoothing_window % 2 == 0) throw Error(Errc::invalid_argument, "smoothing_window odd");
    if (!(end_threshold >= 0.0)) throw Error(Errc::invalid_argument, "end_threshold must be >= 0");
    if (!(mm_per_pixel > 0.0)) throw Error(Errc::invalid_argument, "mm_per_pixel must be > 0");
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Field table shared by serialization and comparison.
#define NECKVOL_CONFIG_FIELDS(X)                                                                           \
  X(window) X(mad_k) X(sigmas) X(knn) X(denoise_sigmas) X(near_mm) X(far_mm) X(quantize_mm) X(max_shift_px) \
  X(gap_mm) X(plane_fraction) X(dy_mm) X(prominence_fraction) X(smoothing_window) X(end_threshold)          \
  X(interpolate_edges) X(mm_per_pixel)

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json::object();
#define X(f) j[#f] = c.f;
  NECKVOL_CONFIG_FIELDS(X)
#undef X
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
  if (!j.is_object()) throw Error(Errc::malformed_file, "pipeline config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = key == "schema_version";
#define X(f)                                      \
  if (key == #f) {                                \
    try {                                         \
      value.get_to(c.f);                          \
    } catch (const nlohmann::json::exception&) {  \
      throw Error(Errc::malformed_file, "config field '" #f "' has the wrong type"); \
    }                                             \
    known = true;                                 \
  }
    NECKVOL_CONFIG_FIELDS(X)
#undef X
    if (!known) throw Error(Errc::malformed_file, "unknown config field '" + key + "'");
  }
}

/// Names of the fields whose values differ.
inline std::vector<std::string> config_differences(const PipelineConfig& a, const PipelineConfig& b) {
  std::vector<std::string> diff;
#define X(f) \
  if (!(a.f == b.f)) diff.emplace_back(#f);
  NECKVOL_CONFIG_FIELDS(X)
#undef X
  return diff;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::unreadable_path, path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_file, path.string() + ": " + e.what());
  }
  auto cfg = j.get<PipelineConfig>();
  return cfg;
}

inline void save_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
  nlohmann::json j = cfg;
  j["schema_version"] = kSchemaVersion;
  std::ofstream out(path);
  if (!out) throw Error(Errc::unwritable_path, path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::unwritable_path, path.string());
}

}  // namespace neckvol
