#pragma once

// Accuracy/precision experiment on phantoms (baseline vs. bump) and
// session-to-session comparison of reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neckvol/config.hpp"
#include "neckvol/phantom.hpp"
#include "neckvol/pipeline.hpp"
#include "neckvol/random.hpp"

namespace neckvol {

/// Mean and sample standard deviation (n - 1 denominator).
inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw Error(Errc::empty_input, "mean of empty list");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) throw Error(Errc::empty_input, "sample std needs two values");
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// 100 * |measured - truth| / |truth|; unchanged when both signs flip.
inline double delta_error_percent(double mean_delta, double true_delta) {
  return 100.0 * std::abs(mean_delta - true_delta) / std::abs(true_delta);
}

struct ExperimentOptions {
  std::uint64_t master_seed = 1;
  std::size_t frames_per_capture = 10;
  // Calibrate the gap once on a noiseless baseline render and use it for
  // every run; otherwise the configured gap_mm is used as is.
  bool calibrate_gap = true;
};

struct ExperimentResult {
  std::vector<double> baseline_volumes;
  std::vector<double> augmented_volumes;
  std::vector<std::uint64_t> baseline_seeds;
  std::vector<std::uint64_t> augmented_seeds;
  double true_delta_liters = 0.0;
  double mean_delta_liters = 0.0;
  double delta_error_percent = 0.0;
  double std_baseline_liters = 0.0;
  double std_augmented_liters = 0.0;
  double gap_mm = 0.0;

  friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

enum class Condition : std::uint64_t { baseline = 0, augmented = 1 };

inline std::uint64_t run_seed(std::uint64_t master, Condition condition, std::uint64_t run) {
  return rng::mix({master, static_cast<std::uint64_t>(condition), run});
}

/// Measures the baseline phantom and the bump phantom n times each, every
/// run with fresh sensor noise, and compares the mean volume difference
/// with the analytic bump volume.
inline ExperimentResult run_experiment(const PhantomSpec& spec, const PhantomSpec& bump_spec, std::size_t n,
                                       PipelineConfig cfg, const ExperimentOptions& opt = {}) {
  if (n < 2) throw Error(Errc::invalid_argument, "need at least two runs per condition");
  if (opt.frames_per_capture == 0) throw Error(Errc::invalid_argument, "frames_per_capture must be >= 1");
  if (!bump_spec.bump) throw Error(Errc::invalid_argument, "bump spec has no bump");
  {
    PhantomSpec a = spec, b = bump_spec;
    a.bump.reset();
    b.bump.reset();
    a.seed = b.seed = 0;
    if (!(a == b)) throw Error(Errc::parameter_mismatch, "bump spec must differ from the baseline only by the bump");
  }
  const auto render_cfg = default_render_config(bump_spec, cfg.mm_per_pixel);
  ExperimentResult res;
  res.gap_mm = opt.calibrate_gap ? calibrate_phantom_gap(spec, render_cfg, cfg) : cfg.gap_mm;
  cfg.gap_mm = res.gap_mm;

  auto measure = [&](PhantomSpec s, Condition cond, std::size_t i, std::vector<double>& vols,
                     std::vector<std::uint64_t>& seeds) {
    s.seed = run_seed(opt.master_seed, cond, i);
    seeds.push_back(s.seed);
    try {
      const auto front = render_frames(s, View::front, render_cfg, opt.frames_per_capture);
      const auto back = render_frames(s, View::back, render_cfg, opt.frames_per_capture);
      vols.push_back(run_pipeline(front, back, cfg).volume_liters);
    } catch (const Error& e) {
      throw Error(Errc::pipeline_failure, "run " + std::to_string(i) + " (seed " + std::to_string(s.seed) +
                                              ") failed: " + e.what());
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    measure(spec, Condition::baseline, i, res.baseline_volumes, res.baseline_seeds);
    measure(bump_spec, Condition::augmented, i, res.augmented_volumes, res.augmented_seeds);
  }
  res.true_delta_liters = analytic_neck_volume(bump_spec) - analytic_neck_volume(spec);
  res.mean_delta_liters = mean_of(res.augmented_volumes) - mean_of(res.baseline_volumes);
  res.delta_error_percent = delta_error_percent(res.mean_delta_liters, res.true_delta_liters);
  res.std_baseline_liters = sample_std(res.baseline_volumes);
  res.std_augmented_liters = sample_std(res.augmented_volumes);
  return res;
}

inline nlohmann::json experiment_json(const ExperimentResult& r) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["baseline"] = {{"volumes_liters", r.baseline_volumes},
                   {"seeds", r.baseline_seeds},
                   {"mean_liters", mean_of(r.baseline_volumes)},
                   {"std_liters", r.std_baseline_liters}};
  j["augmented"] = {{"volumes_liters", r.augmented_volumes},
                    {"seeds", r.augmented_seeds},
                    {"mean_liters", mean_of(r.augmented_volumes)},
                    {"std_liters", r.std_augmented_liters}};
  j["true_delta_liters"] = r.true_delta_liters;
  j["mean_delta_liters"] = r.mean_delta_liters;
  j["delta_error_percent"] = r.delta_error_percent;
  j["gap_mm"] = r.gap_mm;
  return j;
}

struct SessionDelta {
  double delta_liters = 0.0;
  double delta_percent = 0.0;
  // Vertical overlap of the two neck bounds, mm, and as a fraction of the
  // reference bounds' height.
  double bounds_overlap_mm = 0.0;
  double bounds_overlap_fraction = 0.0;
};

// y-range [low, high] covered by a report's bounded slices.
inline std::pair<double, double> bounds_range(const MeasurementReport& r) {
  const double half = 0.5 * r.profile.dy_mm;
  return {r.profile.slice_centers.at(r.bounds.start_index) - half, r.profile.slice_centers.at(r.bounds.end_index) + half};
}

/// Refuses to compare reports made with different parameters.
inline SessionDelta compare_sessions(const MeasurementReport& reference, const MeasurementReport& current) {
  const auto diff = config_differences(reference.parameters, current.parameters);
  if (!diff.empty()) {
    std::string fields;
    for (const auto& f : diff) fields += (fields.empty() ? "" : ", ") + f;
    throw Error(Errc::parameter_mismatch, "sessions used different parameters: " + fields);
  }
  SessionDelta d;
  d.delta_liters = current.volume_liters - reference.volume_liters;
  d.delta_percent = 100.0 * d.delta_liters / reference.volume_liters;
  const auto [rl, rh] = bounds_range(reference);
  const auto [cl, ch] = bounds_range(current);
  d.bounds_overlap_mm = std::max(0.0, std::min(rh, ch) - std::max(rl, cl));
  d.bounds_overlap_fraction = d.bounds_overlap_mm / (rh - rl);
  return d;
}

inline nlohmann::json session_delta_json(const SessionDelta& d) {
  return {{"schema_version", kSchemaVersion},
          {"delta_liters", d.delta_liters},
          {"delta_percent", d.delta_percent},
          {"bounds_overlap_mm", d.bounds_overlap_mm},
          {"bounds_overlap_fraction", d.bounds_overlap_fraction}};
}

}  // namespace neckvol
