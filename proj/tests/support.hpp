#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "neckvol/depth_frame.hpp"
#include "neckvol/point_cloud.hpp"

namespace neckvol::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("neckvol_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline DepthFrame random_integer_frame(std::mt19937_64& gen, std::size_t w, std::size_t h, double s = 1.0) {
  std::uniform_int_distribution<int> depth(0, 65535);
  std::vector<double> v(w * h);
  for (auto& x : v) x = depth(gen);
  return DepthFrame(w, h, s, std::move(v));
}

inline DepthFrame ramp_frame(std::size_t w, std::size_t h) {
  std::vector<double> v(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) v[r * w + c] = 100.0 * static_cast<double>(r) + static_cast<double>(c);
  }
  return DepthFrame(w, h, 1.0, std::move(v));
}

inline PointCloud random_cloud(std::mt19937_64& gen, std::size_t n, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  PointCloud c;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({u(gen), u(gen), u(gen)});
  return c;
}

}  // namespace neckvol::testing
