#pragma once

// Noise suppression: multi-frame averaging, column-wise MAD outlier repair,
// background masking and kNN statistical denoising of point clouds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#ifndef BOOST_ALLOW_DEPRECATED_HEADERS
#define BOOST_ALLOW_DEPRECATED_HEADERS
#endif
#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "neckvol/depth_frame.hpp"
#include "neckvol/error.hpp"
#include "neckvol/parallel.hpp"
#include "neckvol/point_cloud.hpp"

namespace neckvol {

/// Median of a non-empty list; even lengths average the two central order
/// statistics.
inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::empty_input, "median of empty list");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline double median(std::span<const double> values) { return median(std::vector<double>(values.begin(), values.end())); }

/// Median absolute deviation, median(|A_i - median(A)|).
inline double mad(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::empty_input, "MAD of empty list");
  const double m = median(values);
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(), [m](double v) { return std::abs(v - m); });
  return median(std::move(dev));
}

/// Per-pixel mean over frames, skipping zero (invalid) samples.
inline DepthFrame average_frames(std::span<const DepthFrame> frames) {
  if (frames.empty()) throw Error(Errc::empty_input, "no frames to average");
  const auto& first = frames.front();
  for (const auto& f : frames) {
    if (f.width() != first.width() || f.height() != first.height() || f.mm_per_pixel() != first.mm_per_pixel()) {
      throw Error(Errc::dimension_mismatch, "frames differ in size or scale");
    }
  }
  std::vector<double> out(first.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : frames) {
      const double v = f.samples()[i];
      if (v > 0.0) {
        sum += v;
        ++n;
      }
    }
    out[i] = n > 0 ? sum / static_cast<double>(n) : 0.0;
  }
  return DepthFrame(first.width(), first.height(), first.mm_per_pixel(), std::move(out));
}

struct OutlierFillConfig {
  int window = 9;               // odd, pixels along the column
  double mad_scale_k = 1.4826;  // scaled MAD = k * MAD, consistent for Gaussian data
  double threshold_sigmas = 3.0;

  void validate() const {
    if (window < 3 || window % 2 == 0) throw Error(Errc::invalid_argument, "outlier window must be odd and >= 3");
    if (!(mad_scale_k > 0.0)) throw Error(Errc::invalid_argument, "mad_scale_k must be > 0");
    if (!(threshold_sigmas > 0.0)) throw Error(Errc::invalid_argument, "threshold_sigmas must be > 0");
  }
};

struct OutlierFillResult {
  DepthFrame frame;
  std::size_t replaced = 0;
  // Columns whose every valid sample was flagged; returned unchanged.
  std::vector<std::size_t> unrepaired_columns;
};

namespace detail {

struct ColumnFill {
  std::vector<double> values;  // repaired column, same length as the input
  std::size_t replaced = 0;
  bool unrepaired = false;
};

// Moving-window outlier detection on one column. Zeros never enter a window
// and are never modified. Classification always uses the original samples.
inline ColumnFill fill_column(std::span<const double> column, const OutlierFillConfig& cfg) {
  const std::size_t n = column.size();
  const std::size_t half = static_cast<std::size_t>(cfg.window / 2);
  ColumnFill res{std::vector<double>(column.begin(), column.end())};

  std::vector<bool> outlier(n, false);
  std::size_t valid = 0;
  std::size_t flagged = 0;
  std::vector<double> win;
  win.reserve(static_cast<std::size_t>(cfg.window));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(column[i] > 0.0)) continue;
    ++valid;
    win.clear();
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (column[j] > 0.0) win.push_back(column[j]);
    }
    const double med = median(win);
    const double sigma = cfg.mad_scale_k * mad(win);
    if (std::abs(column[i] - med) > cfg.threshold_sigmas * sigma) {
      outlier[i] = true;
      ++flagged;
    }
  }
  if (flagged == 0) return res;
  if (flagged == valid) {
    res.unrepaired = true;
    return res;
  }

  // Nearest non-outlier valid sample above and below each flagged sample.
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> above(n, none), below(n, none);
  std::size_t last = none;
  for (std::size_t i = 0; i < n; ++i) {
    above[i] = last;
    if (column[i] > 0.0 && !outlier[i]) last = i;
  }
  last = none;
  for (std::size_t i = n; i-- > 0;) {
    below[i] = last;
    if (column[i] > 0.0 && !outlier[i]) last = i;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!outlier[i]) continue;
    const std::size_t a = above[i];
    const std::size_t b = below[i];
    if (a != none && b != none) {
      const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
      res.values[i] = column[a] + t * (column[b] - column[a]);
    } else {
      res.values[i] = column[a != none ? a : b];
    }
    ++res.replaced;
  }
  return res;
}

}  // namespace detail

/// Column-wise moving-window MAD outlier repair: samples deviating from the
/// window median by more than threshold_sigmas * k * MAD are replaced by
/// linear interpolation between the nearest clean samples in the column.
inline OutlierFillResult fill_outliers(const DepthFrame& frame, const OutlierFillConfig& cfg = {}) {
  cfg.validate();
  const std::size_t w = frame.width();
  const std::size_t h = frame.height();
  std::vector<detail::ColumnFill> cols(w);
  parallel_for(0, w, [&](std::size_t c) {
    std::vector<double> column(h);
    for (std::size_t r = 0; r < h; ++r) column[r] = frame(r, c);
    cols[c] = detail::fill_column(column, cfg);
  });

  std::vector<double> out(frame.size());
  OutlierFillResult res;
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) out[r * w + c] = cols[c].values[r];
    res.replaced += cols[c].replaced;
    if (cols[c].unrepaired) res.unrepaired_columns.push_back(c);
  }
  res.frame = DepthFrame(w, h, frame.mm_per_pixel(), std::move(out));
  return res;
}

/// Zeroes every sample outside [near_mm, far_mm].
inline DepthFrame mask_background(const DepthFrame& frame, double near_mm, double far_mm) {
  if (!(near_mm > 0.0) || !(near_mm < far_mm)) throw Error(Errc::invalid_argument, "need 0 < near_mm < far_mm");
  std::vector<double> out(frame.samples().begin(), frame.samples().end());
  for (double& v : out) {
    if (v < near_mm || v > far_mm) v = 0.0;
  }
  return DepthFrame(frame.width(), frame.height(), frame.mm_per_pixel(), std::move(out));
}

struct DenoiseConfig {
  int num_neighbors = 8;
  double threshold_sigmas = 3.0;

  void validate() const {
    if (num_neighbors < 1) throw Error(Errc::invalid_argument, "num_neighbors must be >= 1");
    if (!(threshold_sigmas > 0.0)) throw Error(Errc::invalid_argument, "threshold_sigmas must be > 0");
  }
};

/// Mean Euclidean distance from each point to its k nearest neighbors
/// (excluding itself). Equidistant neighbors do not change the mean, so tie
/// order is irrelevant to the result.
inline std::vector<double> mean_neighbor_distances(const PointCloud& cloud, int k) {
  namespace bg = boost::geometry;
  namespace bgi = boost::geometry::index;
  using BPoint = bg::model::point<double, 3, bg::cs::cartesian>;
  using Entry = std::pair<BPoint, std::size_t>;

  const std::size_t n = cloud.size();
  std::vector<Entry> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = cloud.points[i];
    entries.emplace_back(BPoint(p.x, p.y, p.z), i);
  }
  const bgi::rtree<Entry, bgi::rstar<16>> tree(entries.begin(), entries.end());

  std::vector<double> mean_dist(n, 0.0);
  const auto want = static_cast<unsigned>(k + 1);
  parallel_for(0, n, [&](std::size_t i) {
    std::vector<Entry> hits;
    hits.reserve(want);
    tree.query(bgi::nearest(entries[i].first, want), std::back_inserter(hits));
    std::vector<double> d;
    d.reserve(hits.size());
    for (const auto& e : hits) {
      if (e.second != i) d.push_back(distance(cloud.points[i], cloud.points[e.second]));
    }
    // Duplicated coordinates can push the point itself out of the result.
    std::sort(d.begin(), d.end());
    d.resize(std::min(d.size(), static_cast<std::size_t>(k)));
    mean_dist[i] = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  });
  return mean_dist;
}

/// Indices of the points denoise_cloud keeps, in input order.
inline std::vector<std::size_t> denoise_inliers(const PointCloud& cloud, const DenoiseConfig& cfg = {}) {
  cfg.validate();
  if (cloud.size() <= static_cast<std::size_t>(cfg.num_neighbors)) {
    throw Error(Errc::too_few_points, "cloud needs more than num_neighbors points");
  }
  const auto md = mean_neighbor_distances(cloud, cfg.num_neighbors);
  const double n = static_cast<double>(md.size());
  const double mu = std::accumulate(md.begin(), md.end(), 0.0) / n;
  double var = 0.0;
  for (double v : md) var += (v - mu) * (v - mu);
  const double sd = std::sqrt(var / n);
  // Relative slack keeps round-off from splitting a homogeneous cloud.
  const double cut = mu + cfg.threshold_sigmas * sd + 1e-9 * mu;

  std::vector<std::size_t> keep;
  keep.reserve(md.size());
  for (std::size_t i = 0; i < md.size(); ++i) {
    if (!(md[i] > cut)) keep.push_back(i);
  }
  return keep;
}

/// Statistical outlier removal: drops points whose mean kNN distance exceeds
/// mean + threshold_sigmas * std over the cloud.
inline PointCloud denoise_cloud(const PointCloud& cloud, const DenoiseConfig& cfg = {}) {
  PointCloud out;
  out.view = cloud.view;
  out.merge = cloud.merge;
  const auto keep = denoise_inliers(cloud, cfg);
  out.points.reserve(keep.size());
  for (auto i : keep) out.points.push_back(cloud.points[i]);
  return out;
}

}  // namespace neckvol
