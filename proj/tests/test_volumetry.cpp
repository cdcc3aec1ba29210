#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "neckvol/pipeline.hpp"
#include "neckvol/volumetry.hpp"

namespace neckvol {
namespace {

constexpr double kPi = std::numbers::pi;

AreaProfile profile_of(std::vector<double> areas, double dy = 5.0) {
  AreaProfile p;
  p.dy_mm = dy;
  for (std::size_t i = 0; i < areas.size(); ++i) p.slice_centers.push_back(dy * (static_cast<double>(i) + 0.5));
  p.degenerate.assign(areas.size(), false);
  p.counts.assign(areas.size(), 100);
  p.areas = std::move(areas);
  return p;
}

std::vector<Point2> circle(double r, std::size_t n, double cx = 0.0, double cz = 0.0, double phase = 0.0) {
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = phase + 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    pts.push_back({cx + r * std::cos(t), cz + r * std::sin(t)});
  }
  return pts;
}

// Noiseless default phantom through the full pipeline with its calibrated gap.
struct MergedPhantom {
  PhantomSpec spec;
  RenderConfig render_cfg;
  PipelineConfig cfg;
  PointCloud merged;
  double neck_top_y = 0.0;  // cloud y of the top neck pixel row
};

const MergedPhantom& merged_phantom() {
  static const MergedPhantom m = [] {
    MergedPhantom out;
    out.render_cfg = default_render_config(out.spec);
    out.cfg.gap_mm = calibrate_phantom_gap(out.spec, out.render_cfg, out.cfg);
    const std::vector<DepthFrame> f{render(out.spec, View::front, out.render_cfg)};
    const std::vector<DepthFrame> b{render(out.spec, View::back, out.render_cfg)};
    out.merged =
        reconstruct(preprocess_view(f, out.cfg).frame, preprocess_view(b, out.cfg).frame, out.cfg).merged;
    out.neck_top_y = -static_cast<double>(out.render_cfg.neck_top_row) * out.render_cfg.mm_per_pixel;
    return out;
  }();
  return m;
}

TEST(SliceArea, UnitSquare) {
  const auto a = slice_area({{0, 0}, {100, 0}, {100, 100}, {0, 100}});
  EXPECT_FALSE(a.degenerate);
  EXPECT_DOUBLE_EQ(a.area_dm2, 1.0);
}

TEST(SliceArea, DenseCircle) {
  EXPECT_NEAR(slice_area(circle(50.0, 1000)).area_dm2, kPi * 0.25, 0.002 * kPi * 0.25);
}

TEST(SliceArea, ShuffledSquare) {
  std::vector<Point2> sq{{0, 0}, {100, 0}, {100, 100}, {0, 100}, {50, 0}, {100, 50}, {50, 100}, {0, 50}};
  const double ref = slice_area(sq).area_dm2;
  std::mt19937_64 gen(73);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(sq.begin(), sq.end(), gen);
    EXPECT_EQ(slice_area(sq).area_dm2, ref);
  }
}

TEST(SliceArea, FewPointsAreDegenerate) {
  const auto a = slice_area({{0, 0}, {1, 1}});
  EXPECT_TRUE(a.degenerate);
  EXPECT_EQ(a.area_dm2, 0.0);
}

// The closing edge carries area as soon as it is off the x = 0 line: the
// open trapezoid sum misses it, the closed ring does not.
TEST(SliceArea, ClosingEdgeMatters) {
  const std::vector<Point2> sq{{10, 0}, {110, 0}, {110, 100}, {10, 100}};
  double open = 0.0;
  for (std::size_t i = 0; i + 1 < sq.size(); ++i) open += (sq[i].x + sq[i + 1].x) * (sq[i].z - sq[i + 1].z);
  EXPECT_NE(std::abs(0.5 * open) * 1e-4, 1.0);
  EXPECT_DOUBLE_EQ(slice_area(sq).area_dm2, 1.0);
}

TEST(SliceArea, OrderTranslationRotationProperty) {
  std::mt19937_64 gen(79);
  std::uniform_real_distribution<double> u(-500.0, 500.0), ang(0.0, 2.0 * kPi), rad(20.0, 120.0);
  for (int trial = 0; trial < 300; ++trial) {
    // Star-shaped blob: radius varies smoothly with angle.
    const double r0 = rad(gen), wobble = 0.2 * r0, k = static_cast<double>(1 + gen() % 4);
    std::vector<Point2> pts;
    for (int i = 0; i < 720; ++i) {
      const double t = 2.0 * kPi * i / 720.0;
      const double r = r0 + wobble * std::cos(k * t);
      pts.push_back({r * std::cos(t), r * std::sin(t)});
    }
    const double ref = slice_area(pts).area_dm2;

    auto shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    ASSERT_NEAR(slice_area(shuffled).area_dm2, ref, 1e-12 * ref);

    const double dx = u(gen), dz = u(gen);
    auto moved = pts;
    for (auto& p : moved) p = {p.x + dx, p.z + dz};
    ASSERT_NEAR(slice_area(moved).area_dm2, ref, 1e-9 * ref);

    const double th = ang(gen);
    auto turned = pts;
    for (auto& p : turned) p = {std::cos(th) * p.x - std::sin(th) * p.z, std::sin(th) * p.x + std::cos(th) * p.z};
    ASSERT_NEAR(slice_area(turned).area_dm2, ref, 0.005 * ref);
  }
}

TEST(AreaProfile, SingleSlabEqualsFullProjection) {
  std::mt19937_64 gen(83);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  PointCloud c;
  std::vector<Point2> flat;
  for (int i = 0; i < 200; ++i) {
    c.points.push_back({u(gen), -std::abs(u(gen)) * 0.1, u(gen)});
    flat.push_back({c.points.back().x, c.points.back().z});
  }
  const auto p = area_profile(c, 1000.0);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.areas[0], slice_area(flat).area_dm2);
  EXPECT_THROW(area_profile(PointCloud{}, 5.0), Error);
  EXPECT_THROW(area_profile(c, 0.0), Error);
}

TEST(AreaProfile, CentersIncreaseUniformly) {
  PointCloud c;
  for (int y = 0; y < 50; ++y) {
    for (const auto& q : circle(30.0, 40)) c.points.push_back({q.x, -static_cast<double>(y), q.z});
  }
  const auto p = area_profile(c, 5.0, 0.5);
  ASSERT_EQ(p.size(), 10u);
  for (std::size_t i = 1; i < p.size(); ++i) EXPECT_NEAR(p.slice_centers[i] - p.slice_centers[i - 1], 5.0, 1e-12);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p.counts[i], 200u);
    EXPECT_NEAR(p.areas[i], slice_area(circle(30.0, 40)).area_dm2, 1e-12);
  }
}

TEST(AreaProfile, PhantomNeckSlicesNearPiRSquared) {
  const auto& m = merged_phantom();
  const auto p = area_profile(m.merged, m.cfg.dy_mm, 0.5);
  const double truth = kPi * 0.25;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double y = p.slice_centers[i];
    // Interior neck slices only, one slice clear of each end.
    if (y > m.neck_top_y - 10.0 || y < m.neck_top_y - 110.0) continue;
    EXPECT_NEAR(p.areas[i], truth, 0.03 * truth) << "y " << y;
    ++checked;
  }
  EXPECT_GE(checked, 19u);
}

TEST(AreaProfile, PhantomHasNeckMinimum) {
  const auto& m = merged_phantom();
  const auto p = fill_degenerate(area_profile(m.merged, m.cfg.dy_mm, 0.5));
  const auto k = find_neck_minimum(p);
  const double y = p.slice_centers[k];
  EXPECT_LE(y, m.neck_top_y + m.cfg.dy_mm);
  EXPECT_GE(y, m.neck_top_y - m.spec.neck_height_mm - m.cfg.dy_mm);
}

TEST(FillDegenerate, InteriorGapsInterpolated) {
  auto p = profile_of({1.0, 0.0, 0.0, 4.0, 0.0});
  p.degenerate = {false, true, true, false, true};
  const auto f = fill_degenerate(p);
  EXPECT_DOUBLE_EQ(f.areas[1], 2.0);
  EXPECT_DOUBLE_EQ(f.areas[2], 3.0);
  EXPECT_EQ(f.areas[4], 0.0);
  EXPECT_TRUE(f.degenerate[1]);
}

TEST(NeckMinimum, Examples) {
  EXPECT_EQ(find_neck_minimum(profile_of({3, 2, 1, 2, 3})), 2u);
  try {
    find_neck_minimum(profile_of({1, 2, 3, 4, 5, 6}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::no_local_minimum);
  }
  // Equal minima: the higher slice wins.
  EXPECT_EQ(find_neck_minimum(profile_of({5, 1, 4, 4, 1, 5, 6})), 4u);
  // Minima inside the outer tenth are ignored.
  EXPECT_EQ(find_neck_minimum(profile_of({9, 0.1, 5, 5, 5, 2, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 9, 9})), 5u);
}

TEST(NeckBounds, Examples) {
  const auto p = profile_of({5, 3, 1, 3, 5});
  const auto b = neck_bounds(p, 2, 1.0);
  EXPECT_EQ(b.start_index, 0u);
  EXPECT_EQ(b.end_index, 4u);
  EXPECT_EQ(b.cut_level, 5.0);
  EXPECT_EQ(b.prominence, 4.0);
  const auto tight = neck_bounds(p, 2, 1e-9);
  EXPECT_EQ(tight.start_index, 2u);
  EXPECT_EQ(tight.end_index, 2u);
  try {
    neck_bounds(profile_of({2, 2, 2}), 1, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::flat_profile);
  }
  EXPECT_THROW(neck_bounds(p, 2, 0.0), Error);
  EXPECT_THROW(neck_bounds(p, 9, 0.5), Error);
}

TEST(NeckBounds, PhantomBoundsInsideCylinder) {
  const auto& m = merged_phantom();
  const auto p = fill_degenerate(area_profile(m.merged, m.cfg.dy_mm, 0.5));
  const auto b = neck_bounds(p, find_neck_minimum(p), 0.5);
  const double lo = p.slice_centers[b.start_index] - 0.5 * p.dy_mm;
  const double hi = p.slice_centers[b.end_index] + 0.5 * p.dy_mm;
  // Neck pixel rows cover (top - h + s/2, top + s/2] in cloud y.
  const double s = m.render_cfg.mm_per_pixel;
  EXPECT_GE(lo, m.neck_top_y - m.spec.neck_height_mm + 0.5 * s - 1e-9);
  EXPECT_LE(hi, m.neck_top_y + 0.5 * s + 1e-9);
}

TEST(NeckVolume, UnitSlice) {
  const auto p = profile_of({1.0}, 100.0);
  NeckBounds b;
  EXPECT_DOUBLE_EQ(neck_volume(p, b).liters, 1.0);
  b.end_index = 3;
  EXPECT_THROW(neck_volume(p, b), Error);
}

TEST(NeckVolume, DegenerateWarning) {
  auto p = profile_of({1, 1, 1, 1, 1});
  p.degenerate = {false, true, true, false, false};
  NeckBounds b;
  b.end_index = 4;
  EXPECT_TRUE(neck_volume(p, b).degenerate_warning);
  p.degenerate = {false, true, false, false, false};
  EXPECT_FALSE(neck_volume(p, b).degenerate_warning);
}

TEST(NeckVolume, AdditiveProperty) {
  std::mt19937_64 gen(89);
  std::uniform_real_distribution<double> a(0.1, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> areas(3 + gen() % 30);
    for (auto& v : areas) v = a(gen);
    const auto p = profile_of(areas, 1.0 + static_cast<double>(gen() % 10));
    NeckBounds whole;
    whole.start_index = gen() % (areas.size() - 1);
    whole.end_index = whole.start_index + 1 + gen() % (areas.size() - whole.start_index - 1);
    whole.min_index = whole.start_index;
    const std::size_t split = whole.start_index + gen() % (whole.end_index - whole.start_index);
    NeckBounds lower = whole, upper = whole;
    lower.end_index = split;
    upper.start_index = upper.min_index = split + 1;
    const double total = neck_volume(p, whole).liters;
    // Same summation order on both sides, so equality is exact.
    double parts = 0.0;
    for (std::size_t i = whole.start_index; i <= whole.end_index; ++i) parts += p.areas[i] * (p.dy_mm / 100.0);
    ASSERT_EQ(total, parts);
    ASSERT_NEAR(neck_volume(p, lower).liters + neck_volume(p, upper).liters, total, 1e-12 * total);
  }
}

TEST(NeckVolume, CubicScalingProperty) {
  std::mt19937_64 gen(97);
  std::uniform_real_distribution<double> r(20.0, 60.0);
  for (int trial = 0; trial < 10; ++trial) {
    PointCloud c;
    for (int y = 0; y < 60; ++y) {
      const double rad = r(gen);
      for (const auto& q : circle(rad, 64, 0.0, 0.0, 0.01 * y)) c.points.push_back({q.x, -static_cast<double>(y), q.z});
    }
    const double scale = 0.5 + static_cast<double>(gen() % 6) * 0.25;
    PointCloud big = c;
    for (auto& p : big.points) p = {p.x * scale, p.y * scale, p.z * scale};
    const auto p1 = area_profile(c, 5.0, 0.5);
    const auto p2 = area_profile(big, 5.0 * scale, 0.5 * scale);
    ASSERT_EQ(p1.size(), p2.size());
    NeckBounds b;
    b.end_index = p1.size() - 1;
    const double v1 = neck_volume(p1, b).liters;
    EXPECT_NEAR(neck_volume(p2, b).liters, v1 * scale * scale * scale, 1e-6 * v1 * scale * scale * scale);
  }
}

TEST(NeckVolume, PhantomCylinder) {
  const auto& m = merged_phantom();
  const auto rep = measure_volume(m.merged, m.cfg);
  const double truth = analytic_neck_volume(m.spec);
  EXPECT_NEAR(truth, 0.9425, 1e-4);
  EXPECT_NEAR(rep.volume_liters, truth, 0.05 * truth);
}

TEST(NeckVolume, SliceThicknessStability) {
  const auto& m = merged_phantom();
  auto coarse = m.cfg;
  coarse.dy_mm = 2.0 * m.cfg.dy_mm;
  const double fine = measure_volume(m.merged, m.cfg).volume_liters;
  EXPECT_NEAR(measure_volume(m.merged, coarse).volume_liters, fine, 0.03 * fine);
}

TEST(NeckVolume, StrictlyIncreasingInGap) {
  const auto& m = merged_phantom();
  const std::vector<DepthFrame> f{render(m.spec, View::front, m.render_cfg)};
  const std::vector<DepthFrame> b{render(m.spec, View::back, m.render_cfg)};
  auto cfg = m.cfg;
  const auto front = preprocess_view(f, cfg).frame;
  const auto back = preprocess_view(b, cfg).frame;
  double last = 0.0;
  for (double gap : {0.0, 2.0, 5.0, 10.0, 20.0}) {
    cfg.gap_mm = gap;
    const double v = measure_volume(reconstruct(front, back, cfg).merged, cfg).volume_liters;
    EXPECT_GT(v, last) << "gap " << gap;
    last = v;
  }
}

// Four side faces of an axis-aligned cube, sampled every 1 mm.
PointCloud cube_shell(double side) {
  PointCloud c;
  const int n = static_cast<int>(side);
  for (int y = 0; y < n; ++y) {
    for (int i = 0; i <= n; ++i) {
      const double t = i;
      for (const Point3& p : {Point3{t, y + 0.5, 0}, Point3{t, y + 0.5, side}, Point3{0, y + 0.5, t},
                              Point3{side, y + 0.5, t}}) {
        c.points.push_back(p);
      }
    }
  }
  return c;
}

TEST(VoxelOracle, CubeAndConvergence) {
  const auto cube = cube_shell(100.0);
  const double v2 = voxel_volume_oracle(cube, 0.0, 100.0, 2.0);
  EXPECT_NEAR(v2, 1.0, 0.02);
  const double v1 = voxel_volume_oracle(cube, 0.0, 100.0, 1.0);
  EXPECT_NEAR(v1, v2, 0.01 * v2);
  try {
    voxel_volume_oracle(cube, 0.0, 100.0, 30.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::voxel_too_coarse);
  }
}

TEST(VoxelOracle, AgreesWithSlicesOnPhantomCylinder) {
  const auto& m = merged_phantom();
  const auto rep = measure_volume(m.merged, m.cfg);
  const auto& p = rep.profile;
  const double lo = p.slice_centers[rep.bounds.start_index] - 0.5 * p.dy_mm;
  const double hi = p.slice_centers[rep.bounds.end_index] + 0.5 * p.dy_mm;
  const double oracle = voxel_volume_oracle(m.merged, lo, hi, 1.0);
  EXPECT_NEAR(rep.volume_liters, oracle, 0.03 * oracle);
  EXPECT_NEAR(voxel_volume_oracle(m.merged, lo, hi, 0.5), oracle, 0.01 * oracle);
}

}  // namespace
}  // namespace neckvol
