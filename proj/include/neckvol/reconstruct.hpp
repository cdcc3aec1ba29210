#pragma once

// Frames to point clouds, and the two-view merge: mean equalization, a
// 180 degree turn about the vertical axis and a fixed gap between views.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "neckvol/depth_frame.hpp"
#include "neckvol/error.hpp"
#include "neckvol/point_cloud.hpp"

namespace neckvol {

/// One point per nonzero sample: (col * s, -row * s, depth).
inline PointCloud frame_to_cloud(const DepthFrame& frame, ViewTag view = ViewTag::front) {
  PointCloud cloud;
  cloud.view = view;
  const double s = frame.mm_per_pixel();
  cloud.points.reserve(frame.count_valid());
  for (std::size_t r = 0; r < frame.height(); ++r) {
    for (std::size_t c = 0; c < frame.width(); ++c) {
      const double d = frame(r, c);
      if (d > 0.0) cloud.points.push_back({static_cast<double>(c) * s, -static_cast<double>(r) * s, d});
    }
  }
  if (cloud.empty()) throw Error(Errc::empty_cloud, "frame has no valid samples");
  return cloud;
}

class RotationAngle {
 public:
  explicit RotationAngle(double degrees) : theta_(std::fmod(degrees, 360.0)) {
    if (!std::isfinite(degrees)) throw Error(Errc::invalid_argument, "rotation angle must be finite");
    if (theta_ < 0.0) theta_ += 360.0;
    if (theta_ >= 360.0) theta_ = 0.0;
  }
  double degrees() const noexcept { return theta_; }

  // Exact values at multiples of 90 degrees so quarter turns are exact.
  double cos() const noexcept {
    if (theta_ == 0.0) return 1.0;
    if (theta_ == 90.0 || theta_ == 270.0) return 0.0;
    if (theta_ == 180.0) return -1.0;
    return std::cos(theta_ * std::numbers::pi / 180.0);
  }
  double sin() const noexcept {
    if (theta_ == 0.0 || theta_ == 180.0) return 0.0;
    if (theta_ == 90.0) return 1.0;
    if (theta_ == 270.0) return -1.0;
    return std::sin(theta_ * std::numbers::pi / 180.0);
  }

 private:
  double theta_;
};

/// Multiplies every point by R_y = [[cos, 0, sin], [0, 1, 0], [-sin, 0, cos]].
inline PointCloud rotate_y(PointCloud cloud, const RotationAngle& angle) {
  const double c = angle.cos();
  const double s = angle.sin();
  for (auto& p : cloud.points) {
    const double x = c * p.x + s * p.z;
    const double z = -s * p.x + c * p.z;
    p.x = x;
    p.z = z;
  }
  return cloud;
}

/// Back cloud translated so its centroid equals the front centroid.
inline PointCloud equalize_means(const PointCloud& front, const PointCloud& back) {
  return translated(back, centroid(front) - centroid(back));
}

/// Depth of a view's silhouette: the mean of the largest `fraction` of z
/// values (at least one), i.e. the far rim where the view's surface turns
/// away from the camera. fraction 0 gives the maximum.
inline double silhouette_plane(const PointCloud& cloud, double fraction) {
  if (cloud.empty()) throw Error(Errc::empty_cloud, "silhouette plane of empty cloud");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(Errc::invalid_argument, "plane fraction must be in [0, 1]");
  std::vector<double> z;
  z.reserve(cloud.size());
  for (const auto& p : cloud.points) z.push_back(p.z);
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(z.size())));
  std::nth_element(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(k - 1), z.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += z[i];
  return sum / static_cast<double>(k);
}

struct MergeOptions {
  double gap_mm = 0.0;
  double plane_fraction = 0.002;
};

/// Two-view merge. Both views are referred to their own silhouette plane
/// and the front centroid in x and y, so that after the half turn about the
/// vertical axis the back surface lies at z >= 0 and the front at z <= 0.
/// The back is then pushed out by gap_mm and the union is moved back to the
/// front cloud's original frame. Front points come first, in input order.
inline PointCloud merge_front_back(const PointCloud& front, const PointCloud& back, const MergeOptions& opt = {}) {
  if (front.empty() || back.empty()) throw Error(Errc::empty_cloud, "cannot merge an empty cloud");
  if (!(opt.gap_mm >= 0.0) || !std::isfinite(opt.gap_mm)) throw Error(Errc::invalid_gap, "gap_mm must be >= 0");

  const Point3 shift = centroid(front) - centroid(back);
  const PointCloud back_eq = translated(back, shift);
  const Point3 c = centroid(front);
  const double plane_f = silhouette_plane(front, opt.plane_fraction);
  const double plane_b = silhouette_plane(back_eq, opt.plane_fraction);
  const Point3 pivot{c.x, c.y, plane_f};

  PointCloud back_local = rotate_y(translated(back_eq, Point3{-c.x, -c.y, -plane_b}), RotationAngle(180.0));

  PointCloud merged;
  merged.view = ViewTag::merged;
  merged.points.reserve(front.size() + back.size());
  merged.points.insert(merged.points.end(), front.points.begin(), front.points.end());
  for (auto p : back_local.points) {
    p.z = std::abs(p.z) + opt.gap_mm;
    merged.points.push_back(p + pivot);
  }
  merged.merge = MergeRecord{opt.gap_mm, Point3{}, shift, pivot, plane_b};
  return merged;
}

inline PointCloud merge_front_back(const PointCloud& front, const PointCloud& back, double gap_mm) {
  MergeOptions opt;
  opt.gap_mm = gap_mm;
  return merge_front_back(front, back, opt);
}

/// Gap that makes a cylinder of known radius come out at its true depth:
/// 2r minus the depth extents (silhouette plane to nearest point) of both
/// views, measured over points with y in [y_low, y_high].
inline double calibrate_gap(const PointCloud& front, const PointCloud& back, double radius_mm, double y_low,
                            double y_high, double plane_fraction = MergeOptions{}.plane_fraction) {
  auto extent = [&](const PointCloud& cloud) {
    const double plane = silhouette_plane(cloud, plane_fraction);
    double nearest = plane;
    bool any = false;
    for (const auto& p : cloud.points) {
      if (p.y < y_low || p.y > y_high) continue;
      nearest = std::min(nearest, p.z);
      any = true;
    }
    if (!any) throw Error(Errc::empty_cloud, "no points in the calibration band");
    return plane - nearest;
  };
  const PointCloud back_eq = equalize_means(front, back);
  const double gap = 2.0 * radius_mm - (extent(front) + extent(back_eq));
  if (gap < -1e-9 * radius_mm) throw Error(Errc::invalid_gap, "calibrated gap is negative");
  return std::max(0.0, gap);
}

}  // namespace neckvol
