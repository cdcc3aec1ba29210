#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "neckvol/phantom.hpp"
#include "neckvol/phantom_json.hpp"
#include "support.hpp"

namespace neckvol {
namespace {

constexpr double kPi = std::numbers::pi;

PhantomSpec cylinder_only() {
  PhantomSpec s;
  s.head.reset();
  s.shoulders.reset();
  return s;
}

TEST(Render, CylinderSilhouetteWidth) {
  for (double s : {1.0, 2.0}) {
    const auto spec = cylinder_only();
    const auto cfg = default_render_config(spec, s);
    const auto f = render(spec, View::front, cfg);
    const auto rows = static_cast<std::size_t>(spec.neck_height_mm / s);
    for (std::size_t r = cfg.neck_top_row; r < cfg.neck_top_row + rows; ++r) {
      std::size_t width = 0;
      for (std::size_t c = 0; c < f.width(); ++c) width += f(r, c) > 0.0;
      EXPECT_NEAR(static_cast<double>(width), 2.0 * spec.neck_radius_mm / s, 1.0) << "row " << r;
    }
    // Nothing above or below the cylinder.
    for (double v : f.row(cfg.neck_top_row - 1)) EXPECT_EQ(v, 0.0);
    for (double v : f.row(cfg.neck_top_row + rows)) EXPECT_EQ(v, 0.0);
  }
}

TEST(Render, DepthOfNeckCenter) {
  const auto spec = cylinder_only();
  const auto cfg = default_render_config(spec);
  const auto f = render(spec, View::front, cfg);
  // Pixel center x = (W/2 - W/2) s = 0: nearest surface is r in front of the axis.
  EXPECT_DOUBLE_EQ(f(cfg.neck_top_row + 5, cfg.width / 2), 1000.0 - 50.0);
}

TEST(Render, DeterministicAndSeeded) {
  PhantomSpec spec;
  spec.noise_sigma_mm = 2.0;
  spec.spike_rate = 0.005;
  spec.seed = 99;
  const auto cfg = default_render_config(spec);
  const auto a = render(spec, View::front, cfg, 3);
  EXPECT_EQ(render(spec, View::front, cfg, 3), a);
  EXPECT_NE(render(spec, View::front, cfg, 4), a);
  spec.seed = 100;
  EXPECT_NE(render(spec, View::front, cfg, 3), a);
}

TEST(Render, ThreadCountDoesNotChangeFrames) {
  PhantomSpec spec;
  spec.noise_sigma_mm = 2.0;
  spec.spike_rate = 0.01;
  const auto cfg = default_render_config(spec);
  ::setenv("NECKVOL_THREADS", "1", 1);
  const auto serial = render(spec, View::back, cfg, 7);
  ::setenv("NECKVOL_THREADS", "4", 1);
  const auto parallel = render(spec, View::back, cfg, 7);
  ::unsetenv("NECKVOL_THREADS");
  EXPECT_EQ(serial, parallel);
}

TEST(Render, BackIsHorizontalMirrorOfFront) {
  PhantomSpec spec;
  const auto cfg = default_render_config(spec);
  const auto f = render(spec, View::front, cfg);
  const auto b = render(spec, View::back, cfg);
  for (std::size_t r = 0; r < cfg.height; ++r) {
    for (std::size_t c = 1; c < cfg.width; ++c) ASSERT_EQ(f(r, c), b(r, cfg.width - c)) << r << "," << c;
  }
}

TEST(Render, BumpOnlyChangesFrontAndOnlyTowardCamera) {
  PhantomSpec plain;
  PhantomSpec bumped = plain;
  bumped.bump = BumpSpec{};
  const auto cfg = default_render_config(bumped);
  EXPECT_EQ(render(plain, View::back, cfg), render(bumped, View::back, cfg));
  const auto f0 = render(plain, View::front, cfg);
  const auto f1 = render(bumped, View::front, cfg);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < f0.size(); ++i) {
    const double a = f0.samples()[i], b = f1.samples()[i];
    if (a == b) continue;
    ++changed;
    EXPECT_GT(a, 0.0);
    EXPECT_LT(b, a);
  }
  // The cap covers roughly pi * 31^2 pixels.
  EXPECT_GT(changed, 2000u);
  EXPECT_LT(changed, 4000u);
}

TEST(Render, TooLargeForFrame) {
  PhantomSpec spec;
  auto cfg = default_render_config(spec);
  cfg.width = 100;
  try {
    render(spec, View::front, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::phantom_too_large);
  }
  spec.pose_distance_m = 0.05;
  EXPECT_THROW(render(spec, View::front, default_render_config(spec)), Error);
}

TEST(Render, ProjectedAreaMatchesAnalytic) {
  for (double s : {1.0, 2.0}) {
    PhantomSpec spec;
    const auto cfg = default_render_config(spec, s);
    const auto f = render(spec, View::front, cfg);
    const double area = static_cast<double>(f.count_valid()) * s * s;
    const double truth = analytic_projected_area(spec);
    EXPECT_NEAR(area, truth, 0.01 * truth) << "s " << s;
  }
}

TEST(Analytic, CylinderVolume) {
  PhantomSpec spec;
  EXPECT_NEAR(analytic_neck_volume(spec), 0.9425, 5e-5);
  EXPECT_DOUBLE_EQ(analytic_neck_volume(spec), kPi * 2500.0 * 120.0 * 1e-6);
}

TEST(Analytic, CapFromChordGeometry) {
  BumpSpec b{60.0, 40.0, 20.0};
  EXPECT_DOUBLE_EQ(b.sphere_radius(), 50.0);
  EXPECT_NEAR(spherical_cap_volume(b.sphere_radius(), b.protrusion_mm) * 1e-3, 54.454, 1e-3);
  PhantomSpec spec;
  spec.bump = b;
  EXPECT_NEAR(analytic_neck_volume(spec) - analytic_neck_volume(PhantomSpec{}),
              spherical_cap_volume(50.0, 20.0) * 1e-6, 1e-12);
}

TEST(Analytic, SolvedCapIsSixtyMilliliters) {
  for (double a : {31.0, 40.0}) {
    const double h = solve_bump_protrusion(a, 60.0);
    EXPECT_LT(h, a);
    const BumpSpec b{60.0, a, h};
    EXPECT_NEAR(spherical_cap_volume(b.sphere_radius(), h), 60000.0, 1e-6);
  }
  EXPECT_NEAR(solve_bump_protrusion(31.0, 60.0), 30.197, 1e-3);
  EXPECT_THROW(solve_bump_protrusion(10.0, 60.0), Error);
}

TEST(Analytic, ZeroSizeBumpIsContinuous) {
  PhantomSpec spec;
  spec.bump = BumpSpec{60.0, 31.0, 0.0};
  EXPECT_EQ(analytic_neck_volume(spec), analytic_neck_volume(PhantomSpec{}));
  spec.bump->protrusion_mm = 1e-9;
  EXPECT_NEAR(analytic_neck_volume(spec), analytic_neck_volume(PhantomSpec{}), 1e-11);
}

TEST(Spec, Validation) {
  PhantomSpec s;
  s.neck_radius_mm = 0.0;
  EXPECT_THROW(s.validate(), Error);
  s = PhantomSpec{};
  s.bump = BumpSpec{60.0, 20.0, 25.0};
  EXPECT_THROW(s.validate(), Error);
  s.bump = BumpSpec{5.0, 20.0, 10.0};
  EXPECT_THROW(s.validate(), Error);
  s = PhantomSpec{};
  s.spike_rate = 1.0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(SpecJson, RoundTripAndVolumeForm) {
  PhantomSpec s;
  s.head.reset();
  s.bump = BumpSpec{55.0, 31.0, 12.5};
  s.seed = 1234567890123ULL;
  s.noise_sigma_mm = 2.0;
  const nlohmann::json j = s;
  EXPECT_EQ(j.get<PhantomSpec>(), s);

  const auto k = nlohmann::json::parse(R"({"shoulder_halfwidth_mm": null,
      "bump": {"center_y_mm": 60, "radius_mm": 31, "volume_ml": 60}})");
  const auto t = k.get<PhantomSpec>();
  EXPECT_FALSE(t.shoulders);
  ASSERT_TRUE(t.head);
  ASSERT_TRUE(t.bump);
  EXPECT_NEAR(t.bump->protrusion_mm, solve_bump_protrusion(31.0, 60.0), 1e-12);

  EXPECT_THROW(nlohmann::json::parse(R"({"head_radii_mm": [1, 2]})").get<PhantomSpec>(), Error);
  EXPECT_THROW(nlohmann::json::parse(R"({"neck_radius_mm": "wide"})").get<PhantomSpec>(), Error);
}

TEST(SpecJson, LoadFromFile) {
  testing::TempDir dir("spec");
  {
    std::ofstream out(dir / "s.json");
    out << R"({"neck_radius_mm": 60, "noise_sigma_mm": 2})";
  }
  const auto s = load_phantom_spec(dir / "s.json");
  EXPECT_EQ(s.neck_radius_mm, 60.0);
  EXPECT_EQ(s.noise_sigma_mm, 2.0);
  EXPECT_THROW(load_phantom_spec(dir / "none.json"), Error);
}

}  // namespace
}  // namespace neckvol
