#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "neckvol/error.hpp"

namespace neckvol {

struct Point3 {
  double x = 0.0;  // lateral, mm
  double y = 0.0;  // vertical (up), mm
  double z = 0.0;  // distance from camera, mm

  friend bool operator==(const Point3&, const Point3&) = default;
  Point3 operator+(const Point3& o) const noexcept { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const noexcept { return {x - o.x, y - o.y, z - o.z}; }
  Point3 operator*(double s) const noexcept { return {x * s, y * s, z * s}; }
};

inline double distance(const Point3& a, const Point3& b) noexcept {
  const Point3 d = a - b;
  return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

enum class ViewTag { front, back, merged };

constexpr std::string_view to_string(ViewTag v) noexcept {
  switch (v) {
    case ViewTag::front: return "front";
    case ViewTag::back: return "back";
    case ViewTag::merged: return "merged";
  }
  return "front";
}

inline ViewTag parse_view(std::string_view s) {
  if (s == "front") return ViewTag::front;
  if (s == "back") return ViewTag::back;
  if (s == "merged") return ViewTag::merged;
  throw Error(Errc::invalid_argument, "unknown view '" + std::string(s) + "'");
}

// Bookkeeping attached to merged clouds so a merge can be replayed.
struct MergeRecord {
  double gap_mm = 0.0;
  Point3 front_translation;  // always zero: the front cloud is the reference
  Point3 back_translation;   // mean-equalization translation of the back cloud
  Point3 pivot;              // (centroid x, centroid y, front silhouette plane z)
  double back_plane_z = 0.0; // back silhouette plane after equalization

  friend bool operator==(const MergeRecord&, const MergeRecord&) = default;
};

struct PointCloud {
  std::vector<Point3> points;
  ViewTag view = ViewTag::front;
  std::optional<MergeRecord> merge;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

inline Point3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(Errc::empty_cloud, "centroid of empty cloud");
  Point3 sum;
  for (const auto& p : cloud.points) sum = sum + p;
  return sum * (1.0 / static_cast<double>(cloud.size()));
}

inline PointCloud translated(PointCloud cloud, const Point3& t) {
  for (auto& p : cloud.points) p = p + t;
  return cloud;
}

// ASCII PLY, x y z in millimeters. Values are written with round-trip
// precision so a cloud survives write/read bit-exactly.
inline void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::unwritable_path, path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "ply\nformat ascii 1.0\n";
  out << "comment view_tag " << to_string(cloud.view) << '\n';
  if (cloud.merge) {
    const auto& m = *cloud.merge;
    out << "comment gap_mm " << m.gap_mm << '\n';
    out << "comment front_translation " << m.front_translation.x << ' ' << m.front_translation.y << ' '
        << m.front_translation.z << '\n';
    out << "comment back_translation " << m.back_translation.x << ' ' << m.back_translation.y << ' '
        << m.back_translation.z << '\n';
    out << "comment pivot " << m.pivot.x << ' ' << m.pivot.y << ' ' << m.pivot.z << '\n';
    out << "comment back_plane_z " << m.back_plane_z << '\n';
  }
  out << "element vertex " << cloud.size() << '\n';
  out << "property double x\nproperty double y\nproperty double z\nend_header\n";
  for (const auto& p : cloud.points) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
  if (!out) throw Error(Errc::unwritable_path, path.string());
}

inline PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::unreadable_path, path.string());
  auto fail = [&](const std::string& why) { return Error(Errc::malformed_file, path.string() + ": " + why); };

  std::string line;
  if (!std::getline(in, line) || line != "ply") throw fail("missing ply magic");
  PointCloud cloud;
  MergeRecord rec;
  bool merged_meta = false;
  std::size_t count = 0;
  bool have_count = false;
  int properties = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw fail("only ascii PLY is supported");
    } else if (key == "comment") {
      std::string what;
      ls >> what;
      if (what == "view_tag") {
        std::string v;
        ls >> v;
        cloud.view = parse_view(v);
      } else if (what == "gap_mm") {
        ls >> rec.gap_mm;
        merged_meta = true;
      } else if (what == "front_translation") {
        ls >> rec.front_translation.x >> rec.front_translation.y >> rec.front_translation.z;
      } else if (what == "back_translation") {
        ls >> rec.back_translation.x >> rec.back_translation.y >> rec.back_translation.z;
      } else if (what == "pivot") {
        ls >> rec.pivot.x >> rec.pivot.y >> rec.pivot.z;
      } else if (what == "back_plane_z") {
        ls >> rec.back_plane_z;
      }
    } else if (key == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex" || !ls) throw fail("expected 'element vertex N'");
      have_count = true;
    } else if (key == "property") {
      ++properties;
    } else if (key == "end_header") {
      break;
    } else {
      throw fail("unexpected header line '" + line + "'");
    }
  }
  if (!have_count || properties != 3) throw fail("expected exactly three vertex properties (x y z)");
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Point3 p;
    if (!(in >> p.x >> p.y >> p.z)) throw fail("truncated vertex list");
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) throw fail("non-finite coordinate");
    cloud.points.push_back(p);
  }
  if (merged_meta) cloud.merge = rec;
  return cloud;
}

}  // namespace neckvol
