#pragma once

// Depth-sensor simulator for head-neck-shoulder phantoms.
//
// Phantom coordinates: x lateral, y up (neck from y = 0 to y = h), z away
// from the front camera, neck axis at x = z = 0. The camera is orthographic
// and sits pose_distance in front of the axis, so a surface point at z has
// depth pose_distance + z in the front view. The back view sees the phantom
// turned half way round its vertical axis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "neckvol/depth_frame.hpp"
#include "neckvol/error.hpp"
#include "neckvol/parallel.hpp"
#include "neckvol/point_cloud.hpp"
#include "neckvol/random.hpp"

namespace neckvol {

struct HeadSpec {
  double a = 80.0;   // lateral semi-axis
  double b = 110.0;  // vertical semi-axis
  double c = 100.0;  // depth semi-axis

  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

struct ShoulderSpec {
  double halfwidth = 150.0;
  double depth = 120.0;
  double height = 100.0;

  friend bool operator==(const ShoulderSpec&, const ShoulderSpec&) = default;
};

// Flat-based spherical cap stuck on the front of the neck. Its base is a disc
// of radius `radius_mm` in the plane tangent to the neck front; the cap rises
// `protrusion_mm` toward the camera.
struct BumpSpec {
  double center_y_mm = 60.0;
  double radius_mm = 31.0;
  double protrusion_mm = 30.0;

  double sphere_radius() const noexcept {
    return (radius_mm * radius_mm + protrusion_mm * protrusion_mm) / (2.0 * protrusion_mm);
  }

  friend bool operator==(const BumpSpec&, const BumpSpec&) = default;
};

struct PhantomSpec {
  double neck_radius_mm = 50.0;
  double neck_height_mm = 120.0;
  std::optional<HeadSpec> head = HeadSpec{};
  std::optional<ShoulderSpec> shoulders = ShoulderSpec{};
  std::optional<BumpSpec> bump;
  double pose_distance_m = 1.0;
  std::uint64_t seed = 1;
  double noise_sigma_mm = 0.0;
  double spike_rate = 0.0;

  void validate() const {
    auto pos = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::invalid_argument, std::string(what) + " must be > 0");
    };
    pos(neck_radius_mm, "neck_radius_mm");
    pos(neck_height_mm, "neck_height_mm");
    pos(pose_distance_m, "pose_distance_m");
    if (head) {
      pos(head->a, "head a");
      pos(head->b, "head b");
      pos(head->c, "head c");
    }
    if (shoulders) {
      pos(shoulders->halfwidth, "shoulder_halfwidth_mm");
      pos(shoulders->depth, "shoulder_depth_mm");
      pos(shoulders->height, "shoulder_height_mm");
    }
    if (bump) {
      pos(bump->radius_mm, "bump radius_mm");
      pos(bump->protrusion_mm, "bump protrusion_mm");
      if (!(bump->protrusion_mm < bump->radius_mm)) {
        throw Error(Errc::invalid_argument, "bump protrusion must be smaller than its radius");
      }
      if (bump->radius_mm >= neck_radius_mm) throw Error(Errc::invalid_argument, "bump wider than the neck");
      if (bump->center_y_mm - bump->radius_mm < 0.0 || bump->center_y_mm + bump->radius_mm > neck_height_mm) {
        throw Error(Errc::invalid_argument, "bump must sit within the neck height");
      }
    }
    if (!(noise_sigma_mm >= 0.0)) throw Error(Errc::invalid_argument, "noise_sigma_mm must be >= 0");
    if (!(spike_rate >= 0.0 && spike_rate < 1.0)) throw Error(Errc::invalid_argument, "spike_rate must be in [0, 1)");
  }

  friend bool operator==(const PhantomSpec&, const PhantomSpec&) = default;
};

/// Volume of a spherical cap of height h on a sphere of radius R, mm^3.
inline double spherical_cap_volume(double sphere_radius, double height) {
  return std::numbers::pi * height * height * (3.0 * sphere_radius - height) / 3.0;
}

/// Cap height giving `volume_ml` for a fixed base radius (bisection; the
/// volume grows monotonically up to the hemisphere).
inline double solve_bump_protrusion(double base_radius_mm, double volume_ml) {
  const double target = volume_ml * 1000.0;
  const double a = base_radius_mm;
  auto vol = [a](double h) { return std::numbers::pi * h * (3.0 * a * a + h * h) / 6.0; };
  if (!(target > 0.0) || !(target < vol(a))) {
    throw Error(Errc::invalid_argument, "requested bump volume does not fit below a hemisphere of that radius");
  }
  const auto [lo, hi] = boost::math::tools::bisect([&](double h) { return vol(h) - target; }, 0.0, a,
                                                   boost::math::tools::eps_tolerance<double>(50));
  return 0.5 * (lo + hi);
}

/// pi r^2 h plus the bump cap, liters.
inline double analytic_neck_volume(const PhantomSpec& spec) {
  const double r = spec.neck_radius_mm;
  double mm3 = std::numbers::pi * r * r * spec.neck_height_mm;
  // Base-radius form of the cap volume; continuous down to a zero-height cap.
  if (spec.bump) {
    const double a = spec.bump->radius_mm;
    const double h = spec.bump->protrusion_mm;
    mm3 += std::numbers::pi * h * (3.0 * a * a + h * h) / 6.0;
  }
  return mm3 * 1e-6;
}

enum class View { front, back };

struct RenderConfig {
  std::size_t width = 0;
  std::size_t height = 0;
  double mm_per_pixel = 1.0;
  // Row whose top edge is the neck top (y = h). The neck axis sits on
  // column width / 2.
  std::size_t neck_top_row = 0;
};

// Lateral extent of the phantom, mm from the axis.
inline double phantom_halfwidth(const PhantomSpec& spec) {
  double w = spec.neck_radius_mm;
  if (spec.head) w = std::max(w, spec.head->a);
  if (spec.shoulders) w = std::max(w, spec.shoulders->halfwidth);
  return w;
}

inline double phantom_top(const PhantomSpec& spec) {
  return spec.head ? spec.neck_height_mm + 1.5 * spec.head->b : spec.neck_height_mm;
}

inline double phantom_bottom(const PhantomSpec& spec) { return spec.shoulders ? -spec.shoulders->height : 0.0; }

/// Smallest frame holding the phantom with a 10 px margin. The neck top row
/// is a multiple of 10 so slice boundaries can line up with the neck ends.
inline RenderConfig default_render_config(const PhantomSpec& spec, double mm_per_pixel = 1.0) {
  constexpr std::size_t margin = 10;
  RenderConfig cfg;
  cfg.mm_per_pixel = mm_per_pixel;
  const auto half = static_cast<std::size_t>(std::ceil(phantom_halfwidth(spec) / mm_per_pixel));
  cfg.width = 2 * (half + margin);
  const auto above = static_cast<std::size_t>(std::ceil((phantom_top(spec) - spec.neck_height_mm) / mm_per_pixel));
  cfg.neck_top_row = (above + margin + 9) / 10 * 10;
  const auto below = static_cast<std::size_t>(std::ceil((spec.neck_height_mm - phantom_bottom(spec)) / mm_per_pixel));
  cfg.height = cfg.neck_top_row + below + margin;
  return cfg;
}

namespace detail {

struct Span {
  double zmin = std::numeric_limits<double>::infinity();
  double zmax = -std::numeric_limits<double>::infinity();
  bool hit() const noexcept { return zmin <= zmax; }
  void add(double lo, double hi) noexcept {
    zmin = std::min(zmin, lo);
    zmax = std::max(zmax, hi);
  }
};

// Nearest and farthest surface along the viewing ray through (x, y).
inline Span ray_extent(const PhantomSpec& spec, double x, double y) {
  Span s;
  const double r = spec.neck_radius_mm;
  const double h = spec.neck_height_mm;
  if (y >= 0.0 && y <= h && std::abs(x) <= r) {
    const double t = std::sqrt(r * r - x * x);
    s.add(-t, t);
  }
  if (spec.bump) {
    const auto& b = *spec.bump;
    const double R = b.sphere_radius();
    const double zc = -r - b.protrusion_mm + R;
    const double rho2 = x * x + (y - b.center_y_mm) * (y - b.center_y_mm);
    if (rho2 <= R * R) {
      const double front = zc - std::sqrt(R * R - rho2);
      if (front < -r) s.add(front, -r);
    }
  }
  if (spec.head && y >= h) {
    const auto& hd = *spec.head;
    const double yc = h + 0.5 * hd.b;
    const double t = 1.0 - (x * x) / (hd.a * hd.a) - (y - yc) * (y - yc) / (hd.b * hd.b);
    if (t >= 0.0) {
      const double z = hd.c * std::sqrt(t);
      s.add(-z, z);
    }
  }
  if (spec.shoulders && y < 0.0) {
    const auto& sh = *spec.shoulders;
    if (y >= -sh.height && std::abs(x) <= sh.halfwidth) s.add(-0.5 * sh.depth, 0.5 * sh.depth);
  }
  return s;
}

}  // namespace detail

/// Noiseless depth of one pixel; 0 where the ray misses the phantom.
inline double render_pixel(const PhantomSpec& spec, View view, const RenderConfig& cfg, std::size_t row,
                           std::size_t col) {
  const double s = cfg.mm_per_pixel;
  const double D = spec.pose_distance_m * 1000.0;
  const double x = (static_cast<double>(col) - static_cast<double>(cfg.width) / 2.0) * s;
  const double y = spec.neck_height_mm + static_cast<double>(cfg.neck_top_row) * s - (static_cast<double>(row) + 0.5) * s;
  if (view == View::front) {
    const auto e = detail::ray_extent(spec, x, y);
    return e.hit() ? D + e.zmin : 0.0;
  }
  // Turned half way round: image x maps to phantom -x, and the nearest
  // surface is the one with the largest phantom z.
  const auto e = detail::ray_extent(spec, -x, y);
  return e.hit() ? D - e.zmax : 0.0;
}

/// Renders one frame. Valid pixels get Gaussian noise and +2000 mm spikes;
/// the stream is keyed by (seed, frame_index, view, pixel), so the result
/// does not depend on thread count.
inline DepthFrame render(const PhantomSpec& spec, View view, const RenderConfig& cfg, std::uint64_t frame_index = 0) {
  spec.validate();
  if (cfg.width == 0 || cfg.height == 0) throw Error(Errc::zero_dimensions, "render size is zero");
  const double s = cfg.mm_per_pixel;
  const double half_px = static_cast<double>(cfg.width) / 2.0;
  const double w = phantom_halfwidth(spec) / s;
  const double top_row = static_cast<double>(cfg.neck_top_row) - (phantom_top(spec) - spec.neck_height_mm) / s;
  const double bottom_row = static_cast<double>(cfg.neck_top_row) + (spec.neck_height_mm - phantom_bottom(spec)) / s;
  if (w >= half_px - 1.0 || top_row < 1.0 || bottom_row > static_cast<double>(cfg.height) - 1.0) {
    throw Error(Errc::phantom_too_large, "phantom does not fit the frame at this resolution");
  }
  double zext = spec.neck_radius_mm + (spec.bump ? spec.bump->protrusion_mm : 0.0);
  if (spec.head) zext = std::max(zext, spec.head->c);
  if (spec.shoulders) zext = std::max(zext, 0.5 * spec.shoulders->depth);
  if (zext >= spec.pose_distance_m * 1000.0) throw Error(Errc::phantom_too_large, "phantom reaches the camera");

  const std::uint64_t key = rng::mix({spec.seed, frame_index, view == View::front ? 0u : 1u});
  std::vector<double> out(cfg.width * cfg.height, 0.0);
  parallel_for(0, cfg.height, [&](std::size_t r) {
    for (std::size_t c = 0; c < cfg.width; ++c) {
      double d = render_pixel(spec, view, cfg, r, c);
      if (d > 0.0) {
        const std::uint64_t idx = r * cfg.width + c;
        if (spec.noise_sigma_mm > 0.0) d += spec.noise_sigma_mm * rng::normal(key, idx);
        if (spec.spike_rate > 0.0 && rng::uniform(rng::mix({key, 0x5bd1e995u}), idx) < spec.spike_rate) d += 2000.0;
        d = std::max(d, 1.0);
      }
      out[r * cfg.width + c] = d;
    }
  });
  return DepthFrame(cfg.width, cfg.height, s, std::move(out));
}

/// Renders `count` frames with consecutive frame indices.
inline std::vector<DepthFrame> render_frames(const PhantomSpec& spec, View view, const RenderConfig& cfg,
                                             std::size_t count, std::uint64_t first_index = 0) {
  std::vector<DepthFrame> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) frames.push_back(render(spec, view, cfg, first_index + i));
  return frames;
}

/// Area of the phantom's orthographic outline, mm^2.
inline double analytic_projected_area(const PhantomSpec& spec) {
  double a = 2.0 * spec.neck_radius_mm * spec.neck_height_mm;
  if (spec.head) a += std::numbers::pi * spec.head->a * spec.head->b * (2.0 / 3.0 + std::sqrt(3.0) / (4.0 * std::numbers::pi));
  if (spec.shoulders) a += 2.0 * spec.shoulders->halfwidth * spec.shoulders->height;
  return a;
}

}  // namespace neckvol
