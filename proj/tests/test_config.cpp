#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "neckvol/config.hpp"
#include "neckvol/pipeline.hpp"
#include "support.hpp"

namespace neckvol {
namespace {

PipelineConfig random_config(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PipelineConfig c;
  c.window = 3 + 2 * static_cast<int>(gen() % 8);
  c.mad_k = 0.5 + 2.0 * u(gen);
  c.sigmas = 0.5 + 5.0 * u(gen);
  c.knn = 1 + static_cast<int>(gen() % 20);
  c.denoise_sigmas = 0.5 + 8.0 * u(gen);
  c.near_mm = 100.0 + 500.0 * u(gen);
  c.far_mm = c.near_mm + 1.0 + 2000.0 * u(gen);
  c.quantize_mm = gen() % 2 == 0;
  c.max_shift_px = static_cast<int>(gen() % 40);
  c.gap_mm = 20.0 * u(gen);
  c.plane_fraction = u(gen);
  c.dy_mm = 0.5 + 10.0 * u(gen);
  c.prominence_fraction = 0.01 + 0.99 * u(gen);
  c.smoothing_window = 1 + 2 * static_cast<int>(gen() % 10);
  c.end_threshold = u(gen);
  c.interpolate_edges = gen() % 2 == 0;
  c.mm_per_pixel = 0.25 + 3.0 * u(gen);
  return c;
}

TEST(Config, DefaultsValidate) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.window, 9);
  EXPECT_EQ(c.mad_k, 1.4826);
  EXPECT_EQ(c.near_mm, 500.0);
  EXPECT_EQ(c.far_mm, 1500.0);
  EXPECT_EQ(c.dy_mm, 5.0);
  EXPECT_EQ(c.prominence_fraction, 0.5);
  EXPECT_EQ(c.smoothing_window, 11);
  EXPECT_EQ(c.end_threshold, 0.25);
  EXPECT_EQ(c.gap_mm, 0.0);
}

TEST(Config, JsonRoundTripProperty) {
  std::mt19937_64 gen(103);
  for (int trial = 0; trial < 500; ++trial) {
    const auto c = random_config(gen);
    ASSERT_NO_THROW(c.validate());
    const nlohmann::json j = c;
    const auto back = nlohmann::json::parse(j.dump()).get<PipelineConfig>();
    ASSERT_EQ(back, c);
    ASSERT_TRUE(config_differences(back, c).empty());
  }
}

TEST(Config, FileRoundTrip) {
  testing::TempDir dir("cfg");
  std::mt19937_64 gen(107);
  const auto c = random_config(gen);
  save_config(c, dir / "c.json");
  EXPECT_EQ(load_config(dir / "c.json"), c);
  std::ifstream in(dir / "c.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
}

TEST(Config, MissingKeysKeepDefaults) {
  const auto c = nlohmann::json::parse(R"({"gap_mm": 4.5, "dy_mm": 2})").get<PipelineConfig>();
  PipelineConfig expected;
  expected.gap_mm = 4.5;
  expected.dy_mm = 2.0;
  EXPECT_EQ(c, expected);
}

TEST(Config, RejectsUnknownAndMistypedFields) {
  try {
    nlohmann::json::parse(R"({"gap": 4.5})").get<PipelineConfig>();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::malformed_file);
  }
  EXPECT_THROW(nlohmann::json::parse(R"({"dy_mm": "five"})").get<PipelineConfig>(), Error);
  EXPECT_THROW(nlohmann::json::parse(R"([1, 2])").get<PipelineConfig>(), Error);
  testing::TempDir dir("cfg");
  {
    std::ofstream out(dir / "bad.json");
    out << "{ not json";
  }
  EXPECT_THROW(load_config(dir / "bad.json"), Error);
  EXPECT_THROW(load_config(dir / "absent.json"), Error);
}

TEST(Config, ValidationCatchesEachField) {
  auto bad = [](auto mutate) {
    PipelineConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](PipelineConfig& c) { c.window = 4; }).validate(), Error);
  EXPECT_THROW(bad([](PipelineConfig& c) { c.knn = 0; }).validate(), Error);
  EXPECT_THROW(bad([](PipelineConfig& c) { c.near_mm = 2000; }).validate(), Error);
  EXPECT_THROW(bad([](PipelineConfig& c) { c.gap_mm = -1; }).validate(), Error);
  EXPECT_THROW(bad([](PipelineConfig& c) { c.dy_mm = 0; }).validate(), Error);
  EXPECT_THROW(bad([](PipelineConfig& c) { c.prominence_fraction = 0; }).validate(), Error);
  EXPECT_THROW(bad([](PipelineConfig& c) { c.smoothing_window = 10; }).validate(), Error);
  EXPECT_THROW(bad([](PipelineConfig& c) { c.mm_per_pixel = 0; }).validate(), Error);
  EXPECT_THROW(bad([](PipelineConfig& c) { c.max_shift_px = -1; }).validate(), Error);
}

TEST(Config, DifferencesNameFields) {
  PipelineConfig a, b;
  b.gap_mm = 1.0;
  b.knn = 3;
  const auto d = config_differences(a, b);
  EXPECT_EQ(d, (std::vector<std::string>{"knn", "gap_mm"}));
}

TEST(Report, JsonRoundTrip) {
  PhantomSpec spec;
  const auto rc = default_render_config(spec);
  const std::vector<DepthFrame> f{render(spec, View::front, rc)};
  const std::vector<DepthFrame> b{render(spec, View::back, rc)};
  auto rep = run_pipeline(f, b, PipelineConfig{});
  rep.session_id = "s-01";
  rep.timestamp = "2026-01-01T00:00:00Z";
  const auto j = report_json(rep);
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  const auto again = report_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(report_json(again).dump(), j.dump());
  EXPECT_EQ(again.parameters, rep.parameters);
  EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"volume_liters": 1})")), Error);
}

TEST(Report, ParameterMismatchOnScale) {
  PhantomSpec spec;
  const auto rc = default_render_config(spec, 2.0);
  const std::vector<DepthFrame> f{render(spec, View::front, rc)};
  try {
    preprocess_view(f, PipelineConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parameter_mismatch);
  }
}

}  // namespace
}  // namespace neckvol
