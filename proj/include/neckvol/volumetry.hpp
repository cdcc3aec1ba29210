#pragma once

// Slice-area profile of a merged cloud, neck localization by the minimum
// slice, prominence-based bounds, and volume by summing slices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "neckvol/error.hpp"
#include "neckvol/parallel.hpp"
#include "neckvol/point_cloud.hpp"

namespace neckvol {

struct Point2 {
  double x = 0.0;
  double z = 0.0;
};

struct SliceArea {
  double area_dm2 = 0.0;
  bool degenerate = false;
};

namespace detail {

// Sorts points by polar angle about their centroid, ties by radius.
inline std::vector<Point2> angular_order(std::vector<Point2> pts) {
  double cx = 0.0, cz = 0.0;
  for (const auto& p : pts) {
    cx += p.x;
    cz += p.z;
  }
  cx /= static_cast<double>(pts.size());
  cz /= static_cast<double>(pts.size());
  struct Keyed {
    double angle, radius;
    Point2 p;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(pts.size());
  for (const auto& p : pts) {
    keyed.push_back({std::atan2(p.z - cz, p.x - cx), std::hypot(p.x - cx, p.z - cz), p});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.angle != b.angle) return a.angle < b.angle;
    if (a.radius != b.radius) return a.radius < b.radius;
    if (a.p.x != b.p.x) return a.p.x < b.p.x;
    return a.p.z < b.p.z;
  });
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = keyed[i].p;
  return pts;
}

// Trapezoid shoelace over a closed ring, mm^2 (signed).
inline double ring_area_mm2(const std::vector<Point2>& ring) {
  double a = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = ring[i];
    const auto& q = ring[(i + 1) % n];
    a += (p.x + q.x) * (p.z - q.z);
  }
  return 0.5 * a;
}

}  // namespace detail

/// Area of the polygon through the points, ordered by angle about their
/// centroid and closed. Fewer than 3 points give 0 and a degenerate flag.
inline SliceArea slice_area(std::vector<Point2> points) {
  if (points.size() < 3) return {0.0, true};
  const auto ring = detail::angular_order(std::move(points));
  return {std::abs(detail::ring_area_mm2(ring)) * 1e-4, false};
}

struct AreaProfile {
  std::vector<double> slice_centers;  // mm, increasing
  std::vector<double> areas;          // dm^2
  std::vector<bool> degenerate;
  std::vector<std::size_t> counts;    // points per slice
  double dy_mm = 0.0;

  std::size_t size() const noexcept { return areas.size(); }
};

/// Bins the cloud into horizontal slabs of height dy_mm whose boundaries lie
/// at origin_y + k * dy_mm, and computes each slab's slice area. The result
/// runs bottom to top.
inline AreaProfile area_profile(const PointCloud& cloud, double dy_mm, double origin_y = 0.0) {
  if (cloud.empty()) throw Error(Errc::empty_cloud, "area profile of empty cloud");
  if (!(dy_mm > 0.0) || !std::isfinite(dy_mm)) throw Error(Errc::invalid_argument, "dy_mm must be > 0");
  // Slab k (counted downward from the origin) holds origin - (k+1)dy < y <= origin - k dy.
  auto slab = [&](double y) { return static_cast<long>(std::floor((origin_y - y) / dy_mm)); };
  long kmin = slab(cloud.points.front().y), kmax = kmin;
  for (const auto& p : cloud.points) {
    const long k = slab(p.y);
    kmin = std::min(kmin, k);
    kmax = std::max(kmax, k);
  }
  const auto n = static_cast<std::size_t>(kmax - kmin + 1);
  std::vector<std::vector<Point2>> bins(n);
  for (const auto& p : cloud.points) {
    // Index 0 is the lowest slab.
    bins[static_cast<std::size_t>(kmax - slab(p.y))].push_back({p.x, p.z});
  }

  AreaProfile prof;
  prof.dy_mm = dy_mm;
  prof.slice_centers.resize(n);
  prof.areas.resize(n);
  prof.counts.resize(n);
  std::vector<char> degen(n, 0);
  parallel_for(0, n, [&](std::size_t i) {
    const long k = kmax - static_cast<long>(i);
    prof.slice_centers[i] = origin_y - (static_cast<double>(k) + 0.5) * dy_mm;
    prof.counts[i] = bins[i].size();
    const auto a = slice_area(std::move(bins[i]));
    prof.areas[i] = a.area_dm2;
    degen[i] = a.degenerate ? 1 : 0;
  });
  prof.degenerate.assign(degen.begin(), degen.end());
  return prof;
}

/// Replaces degenerate slices that have non-degenerate slices on both sides
/// by linear interpolation between those neighbors. Flags are kept.
inline AreaProfile fill_degenerate(AreaProfile prof) {
  const std::size_t n = prof.size();
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < n; ++i) {
    if (prof.degenerate[i]) continue;
    if (prev && i - *prev > 1) {
      const double a = prof.areas[*prev];
      const double b = prof.areas[i];
      for (std::size_t j = *prev + 1; j < i; ++j) {
        const double t = static_cast<double>(j - *prev) / static_cast<double>(i - *prev);
        prof.areas[j] = a + t * (b - a);
      }
    }
    prev = i;
  }
  return prof;
}

/// Index of the lowest local minimum away from the profile ends (the outer
/// 10% of slices on each side are excluded). A flat run counts as a minimum
/// when both neighbors are strictly higher; ties go to the higher slice.
inline std::size_t find_neck_minimum(const AreaProfile& prof) {
  const std::size_t n = prof.size();
  const std::size_t good = static_cast<std::size_t>(std::count(prof.degenerate.begin(), prof.degenerate.end(), false));
  if (good < 3) throw Error(Errc::no_local_minimum, "profile needs at least 3 non-degenerate slices");
  const std::size_t margin = std::max<std::size_t>(n / 10, 1);
  const auto& a = prof.areas;
  std::optional<std::size_t> best;
  for (std::size_t i = 1; i + 1 < n;) {
    std::size_t j = i;
    while (j + 1 < n && a[j + 1] == a[i]) ++j;
    // A run is reported by its highest slice, which must be interior.
    const bool interior = j >= margin && j + margin < n && j + 1 < n;
    if (interior && a[i - 1] > a[i] && a[j + 1] > a[i]) {
      if (!best || a[i] <= a[*best]) best = j;
    }
    i = j + 1;
  }
  if (!best) throw Error(Errc::no_local_minimum, "area profile has no interior local minimum");
  return *best;
}

struct NeckBounds {
  std::size_t min_index = 0;
  std::size_t start_index = 0;
  std::size_t end_index = 0;
  double prominence_fraction = 0.5;
  double prominence = 0.0;  // dm^2
  double cut_level = 0.0;   // dm^2
};

/// Treats the minimum as a peak of the negated profile: its prominence p is
/// the rise to the lower of the two side maxima (each side scanned until a
/// strictly lower slice). The bounds are the contiguous run around the
/// minimum with area <= a_min + fraction * p.
inline NeckBounds neck_bounds(const AreaProfile& prof, std::size_t min_index, double prominence_fraction) {
  const std::size_t n = prof.size();
  if (min_index >= n) throw Error(Errc::out_of_bounds, "min_index outside profile");
  if (!(prominence_fraction > 0.0 && prominence_fraction <= 1.0)) {
    throw Error(Errc::invalid_argument, "prominence_fraction must be in (0, 1]");
  }
  const auto& a = prof.areas;
  const double amin = a[min_index];
  double left_max = amin;
  for (std::size_t k = min_index; k-- > 0;) {
    if (a[k] < amin) break;
    left_max = std::max(left_max, a[k]);
  }
  double right_max = amin;
  for (std::size_t k = min_index + 1; k < n; ++k) {
    if (a[k] < amin) break;
    right_max = std::max(right_max, a[k]);
  }
  const double p = std::min(left_max, right_max) - amin;
  if (!(p > 0.0)) throw Error(Errc::flat_profile, "minimum has zero prominence");

  NeckBounds b;
  b.min_index = min_index;
  b.prominence_fraction = prominence_fraction;
  b.prominence = p;
  b.cut_level = amin + prominence_fraction * p;
  b.start_index = min_index;
  while (b.start_index > 0 && a[b.start_index - 1] <= b.cut_level) --b.start_index;
  b.end_index = min_index;
  while (b.end_index + 1 < n && a[b.end_index + 1] <= b.cut_level) ++b.end_index;
  return b;
}

struct VolumeResult {
  double liters = 0.0;
  std::size_t degenerate_slices = 0;
  bool degenerate_warning = false;  // more than 20% of bounded slices degenerate
};

/// Sum of A_n * dy over the bounded slices; dm^2 * dm = liters.
inline VolumeResult neck_volume(const AreaProfile& prof, const NeckBounds& b) {
  if (b.start_index > b.min_index || b.min_index > b.end_index || b.end_index >= prof.size()) {
    throw Error(Errc::out_of_bounds, "invalid neck bounds");
  }
  VolumeResult v;
  const double dy_dm = prof.dy_mm / 100.0;
  for (std::size_t i = b.start_index; i <= b.end_index; ++i) {
    v.liters += prof.areas[i] * dy_dm;
    if (prof.degenerate[i]) ++v.degenerate_slices;
  }
  const auto count = b.end_index - b.start_index + 1;
  v.degenerate_warning = 5 * v.degenerate_slices > count;
  return v;
}

/// Independent volume estimate by rasterization: each slab of height
/// voxel_mm between y_low and y_high is filled as the angularly ordered
/// polygon of its points on a voxel grid (even-odd rule at cell centers),
/// and the filled cells are counted.
inline double voxel_volume_oracle(const PointCloud& cloud, double y_low, double y_high, double voxel_mm) {
  if (cloud.empty()) throw Error(Errc::empty_cloud, "voxel oracle of empty cloud");
  if (!(voxel_mm > 0.0) || !(y_high > y_low)) throw Error(Errc::invalid_argument, "need voxel_mm > 0 and y_high > y_low");
  const double v = voxel_mm;
  const auto slabs = static_cast<std::size_t>(std::llround((y_high - y_low) / v));
  if (slabs == 0) throw Error(Errc::voxel_too_coarse, "voxel larger than the bounded height");

  std::vector<std::vector<Point2>> bins(slabs);
  for (const auto& p : cloud.points) {
    if (p.y < y_low || p.y >= y_low + static_cast<double>(slabs) * v) continue;
    const auto k = std::min(slabs - 1, static_cast<std::size_t>((p.y - y_low) / v));
    bins[k].push_back({p.x, p.z});
  }

  std::vector<char> empty(slabs, 0);
  for (std::size_t k = 0; k < slabs; ++k) empty[k] = bins[k].size() < 3 ? 1 : 0;
  std::vector<double> counts(slabs, 0.0);
  std::vector<char> coarse(slabs, 0);
  parallel_for(0, slabs, [&](std::size_t k) {
    if (bins[k].size() < 3) return;
    const auto ring = detail::angular_order(std::move(bins[k]));
    double xmin = ring[0].x, xmax = xmin, zmin = ring[0].z, zmax = zmin;
    for (const auto& p : ring) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      zmin = std::min(zmin, p.z);
      zmax = std::max(zmax, p.z);
    }
    if (v > std::min(xmax - xmin, zmax - zmin) / 4.0) {
      coarse[k] = 1;
      return;
    }
    const double x0 = std::floor(xmin / v) * v;
    const double z0 = std::floor(zmin / v) * v;
    const auto nz = static_cast<std::size_t>(std::ceil((zmax - z0) / v)) + 1;
    std::vector<double> xs;
    std::size_t filled = 0;
    for (std::size_t iz = 0; iz < nz; ++iz) {
      const double zc = z0 + (static_cast<double>(iz) + 0.5) * v;
      xs.clear();
      for (std::size_t i = 0; i < ring.size(); ++i) {
        const auto& p = ring[i];
        const auto& q = ring[(i + 1) % ring.size()];
        // Half-open crossing rule so shared vertices count once.
        if ((p.z <= zc) != (q.z <= zc)) xs.push_back(p.x + (zc - p.z) * (q.x - p.x) / (q.z - p.z));
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
        // Cells whose centers x0 + (j + 0.5)v fall inside [xs[i], xs[i+1]).
        const double lo = std::ceil((xs[i] - x0) / v - 0.5);
        const double hi = std::ceil((xs[i + 1] - x0) / v - 0.5);
        if (hi > lo) filled += static_cast<std::size_t>(hi - lo);
      }
    }
    counts[k] = static_cast<double>(filled);
  });
  if (std::any_of(coarse.begin(), coarse.end(), [](char c) { return c != 0; })) {
    throw Error(Errc::voxel_too_coarse, "voxel_mm exceeds a quarter of a slice extent");
  }
  // Slabs thinner than the row spacing can be empty; take them from their
  // neighbors like degenerate slices.
  AreaProfile tmp;
  tmp.areas = counts;
  for (std::size_t k = 0; k < slabs; ++k) tmp.degenerate.push_back(empty[k] != 0);
  counts = fill_degenerate(std::move(tmp)).areas;
  double cells = 0.0;
  for (double c : counts) cells += c;
  return cells * v * v * v * 1e-6;
}

}  // namespace neckvol
