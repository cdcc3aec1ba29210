#pragma once

// Single-view neck measurement: silhouette edges per row, refinement to a
// common depth, half-circumference by arc length, smoothing and neck-end
// detection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "neckvol/depth_frame.hpp"
#include "neckvol/error.hpp"
#include "neckvol/filtering.hpp"
#include "neckvol/parallel.hpp"
#include "neckvol/peaks.hpp"

namespace neckvol {

struct RowEdgePoints {
  std::size_t row = 0;
  std::size_t left_col = 0;
  std::size_t right_col = 0;
  double left_depth = 0.0;
  double right_depth = 0.0;
  // |derivative| at the two detected peaks; used for neck-end detection.
  double left_peak = 0.0;
  double right_peak = 0.0;
  // Sub-pixel positions; equal to the columns unless interpolation is on.
  double left_pos = 0.0;
  double right_pos = 0.0;
};

struct CircumferenceProfile {
  std::vector<std::size_t> rows;
  std::vector<double> lengths;  // half-circumference, mm
  std::optional<std::size_t> neck_end_row;
  bool smoothed = false;
  int smoothing_window = 1;
  std::vector<double> smoothed_lengths;
};

/// Per row: the two most prominent peaks of |forward difference| mark the
/// silhouette edges. Rows without two peaks or without valid depth next to
/// a peak are omitted.
inline std::vector<RowEdgePoints> edge_points_by_derivative(const DepthFrame& frame) {
  const std::size_t w = frame.width();
  std::vector<std::optional<RowEdgePoints>> per_row(frame.height());
  parallel_for(0, frame.height(), [&](std::size_t r) {
    if (w < 3) return;
    const auto x = frame.row(r);
    std::vector<double> d(w - 1);
    for (std::size_t c = 0; c + 1 < w; ++c) d[c] = std::abs(x[c + 1] - x[c]);
    const auto top = most_prominent(find_peaks(d), 2);
    if (top.size() < 2) return;
    const std::size_t p1 = top[0].index;
    const std::size_t p2 = top[1].index;
    // A peak at c sits between columns c and c + 1: the object starts right
    // of the left peak and ends left of the right peak.
    std::size_t left = x[p1 + 1] > 0.0 ? p1 + 1 : p1;
    std::size_t right = x[p2] > 0.0 ? p2 : p2 + 1;
    if (!(x[left] > 0.0) || !(x[right] > 0.0) || left >= right) return;
    RowEdgePoints e;
    e.row = r;
    e.left_col = left;
    e.right_col = right;
    e.left_depth = x[left];
    e.right_depth = x[right];
    e.left_peak = top[0].height;
    e.right_peak = top[1].height;
    e.left_pos = static_cast<double>(left);
    e.right_pos = static_cast<double>(right);
    per_row[r] = e;
  });
  std::vector<RowEdgePoints> out;
  for (auto& e : per_row) {
    if (e) out.push_back(*e);
  }
  if (out.empty()) throw Error(Errc::no_edges, "no row has two derivative peaks");
  return out;
}

struct RefineOptions {
  // Place each edge at the fractional column where the depth profile
  // crosses the mean depth, instead of the nearest sample.
  bool interpolate = false;
};

namespace detail {

// Column in [lo, hi] whose depth is closest to mu; ties go to `outer`.
inline std::optional<std::size_t> closest_to(std::span<const double> x, std::size_t lo, std::size_t hi, double mu,
                                             bool outer_is_lo) {
  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t k = 0; k <= hi - lo; ++k) {
    const std::size_t c = outer_is_lo ? lo + k : hi - k;
    if (!(x[c] > 0.0)) continue;
    const double dist = std::abs(x[c] - mu);
    if (!best || dist < best_d) {
      best = c;
      best_d = dist;
    }
  }
  return best;
}

// Fractional column next to c where the profile crosses mu, searching
// toward `step` (+1 or -1). Falls back to c when there is no crossing.
inline double crossing(std::span<const double> x, std::size_t c, int step, std::size_t lo, std::size_t hi, double mu) {
  const long n = static_cast<long>(c) + step;
  if (n < static_cast<long>(lo) || n > static_cast<long>(hi)) return static_cast<double>(c);
  const double a = x[c];
  const double b = x[static_cast<std::size_t>(n)];
  if (!(b > 0.0) || a == b || (a - mu) * (b - mu) > 0.0) return static_cast<double>(c);
  const double t = (mu - a) / (b - a);
  return static_cast<double>(c) + step * t;
}

}  // namespace detail

/// Moves each edge pair to the columns, one per half row, whose depth is
/// closest to the mean depth of all edge points.
inline std::vector<RowEdgePoints> refine_to_mean_depth(const DepthFrame& frame, const std::vector<RowEdgePoints>& edges,
                                                       const RefineOptions& opt = {}) {
  if (edges.empty()) throw Error(Errc::empty_input, "no edge points to refine");
  double mu = 0.0;
  for (const auto& e : edges) mu += e.left_depth + e.right_depth;
  mu /= 2.0 * static_cast<double>(edges.size());

  std::vector<RowEdgePoints> out(edges.size());
  parallel_for(0, edges.size(), [&](std::size_t i) {
    const auto& e = edges[i];
    const auto x = frame.row(e.row);
    const std::size_t mid = (e.left_col + e.right_col) / 2;
    const auto l = detail::closest_to(x, e.left_col, mid, mu, true);
    const auto r = detail::closest_to(x, mid + 1, e.right_col, mu, false);
    if (!l || !r) {
      throw Error(Errc::no_valid_depth, "row " + std::to_string(e.row) + " has a half without valid depth");
    }
    RowEdgePoints o = e;
    o.left_col = *l;
    o.right_col = *r;
    o.left_depth = x[*l];
    o.right_depth = x[*r];
    o.left_pos = opt.interpolate ? detail::crossing(x, *l, -1, e.left_col, mid, mu) : static_cast<double>(*l);
    o.right_pos = opt.interpolate ? detail::crossing(x, *r, +1, mid + 1, e.right_col, mu) : static_cast<double>(*r);
    out[i] = o;
  });
  return out;
}

/// Arc length in mm of one row's depth profile between the edges:
/// sum of sqrt((s * dcol)^2 + ddepth^2) over consecutive valid samples.
inline double row_half_circumference(const DepthFrame& frame, const RowEdgePoints& e) {
  const double s = frame.mm_per_pixel();
  const auto x = frame.row(e.row);
  struct Vertex {
    double col, depth;
  };
  std::vector<Vertex> v;
  if (e.left_pos < static_cast<double>(e.left_col)) v.push_back({e.left_pos, 0.0});
  std::size_t last_valid = e.left_col;
  for (std::size_t c = e.left_col; c <= e.right_col; ++c) {
    if (!(x[c] > 0.0)) continue;
    if (c - last_valid > 3) {
      throw Error(Errc::no_valid_depth, "gap wider than 2 px in row " + std::to_string(e.row));
    }
    v.push_back({static_cast<double>(c), x[c]});
    last_valid = c;
  }
  if (e.right_pos > static_cast<double>(e.right_col)) v.push_back({e.right_pos, 0.0});
  // Interpolated endpoints sit at the mean depth of their neighbor pair.
  if (v.front().depth == 0.0) {
    const double a = x[e.left_col - 1];
    const double b = x[e.left_col];
    const double t = static_cast<double>(e.left_col) - e.left_pos;
    v.front().depth = b + t * (a - b);
  }
  if (v.back().depth == 0.0) {
    const double a = x[e.right_col];
    const double b = x[e.right_col + 1];
    const double t = e.right_pos - static_cast<double>(e.right_col);
    v.back().depth = a + t * (b - a);
  }
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    len += std::hypot(s * (v[i + 1].col - v[i].col), v[i + 1].depth - v[i].depth);
  }
  return len;
}

inline CircumferenceProfile half_circumference(const DepthFrame& frame, const std::vector<RowEdgePoints>& edges) {
  if (edges.empty()) throw Error(Errc::empty_input, "no edge points");
  CircumferenceProfile p;
  p.rows.resize(edges.size());
  p.lengths.resize(edges.size());
  parallel_for(0, edges.size(), [&](std::size_t i) {
    p.rows[i] = edges[i].row;
    p.lengths[i] = row_half_circumference(frame, edges[i]);
  });
  return p;
}

/// Centered moving mean; near the ends the window is truncated to the
/// samples that exist.
inline std::vector<double> moving_average(const std::vector<double>& signal, int window) {
  if (window < 1 || window % 2 == 0) throw Error(Errc::invalid_argument, "window must be odd and >= 1");
  if (static_cast<std::size_t>(window) > signal.size()) {
    throw Error(Errc::window_too_large, "window larger than signal");
  }
  const std::size_t n = signal.size();
  const std::size_t half = static_cast<std::size_t>(window / 2);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += signal[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

struct NeckEnd {
  std::size_t row = 0;
  bool detected = false;
  double reference = 0.0;  // median peak magnitude over the upper rows
};

/// Scans downward from the first edge row and returns the first row where
/// both edge peaks drop below threshold * reference. Rows without an edge
/// entry count as magnitude 0.
inline NeckEnd detect_neck_end(const std::vector<RowEdgePoints>& edges, const DepthFrame& frame, double threshold) {
  if (edges.empty()) throw Error(Errc::empty_input, "no edge points");
  if (!(threshold >= 0.0)) throw Error(Errc::invalid_argument, "threshold must be >= 0");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i].row <= edges[i - 1].row) throw Error(Errc::invalid_argument, "edge rows must be increasing");
  }
  const std::size_t upper = std::max<std::size_t>(1, edges.size() / 2);
  std::vector<double> mags;
  for (std::size_t i = 0; i < upper; ++i) {
    mags.push_back(edges[i].left_peak);
    mags.push_back(edges[i].right_peak);
  }
  NeckEnd res;
  res.reference = median(std::move(mags));
  const double cut = threshold * res.reference;

  std::size_t k = 0;
  for (std::size_t r = edges.front().row; r < frame.height(); ++r) {
    double a = 0.0, b = 0.0;
    while (k < edges.size() && edges[k].row < r) ++k;
    if (k < edges.size() && edges[k].row == r) {
      a = edges[k].left_peak;
      b = edges[k].right_peak;
    }
    if (a < cut && b < cut) {
      res.row = r;
      res.detected = true;
      return res;
    }
  }
  res.row = frame.height() - 1;
  return res;
}

struct CircumferenceOptions {
  RefineOptions refine;
  double end_threshold = 0.25;
  int smoothing_window = 11;
};

/// Edges, refinement, per-row length, neck-end cut and smoothing on a
/// cropped neck frame.
inline CircumferenceProfile measure_circumference(const DepthFrame& neck, const CircumferenceOptions& opt = {}) {
  const auto raw = edge_points_by_derivative(neck);
  const auto end = detect_neck_end(raw, neck, opt.end_threshold);
  std::vector<RowEdgePoints> kept;
  for (const auto& e : raw) {
    if (!end.detected || e.row < end.row) kept.push_back(e);
  }
  if (kept.empty()) throw Error(Errc::no_edges, "no edge rows above the neck end");
  const auto refined = refine_to_mean_depth(neck, kept, opt.refine);
  auto profile = half_circumference(neck, refined);
  if (end.detected) profile.neck_end_row = end.row;
  // Short profiles get the largest odd window that fits.
  const int n = static_cast<int>(profile.lengths.size());
  const int win = std::min(opt.smoothing_window, n % 2 == 1 ? n : n - 1);
  profile.smoothed = true;
  profile.smoothing_window = win;
  profile.smoothed_lengths = moving_average(profile.lengths, win);
  return profile;
}

}  // namespace neckvol
