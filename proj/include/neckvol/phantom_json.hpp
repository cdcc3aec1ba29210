#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "neckvol/error.hpp"
#include "neckvol/phantom.hpp"

namespace neckvol {

inline void to_json(nlohmann::json& j, const PhantomSpec& s) {
  j = {{"neck_radius_mm", s.neck_radius_mm},
       {"neck_height_mm", s.neck_height_mm},
       {"pose_distance_m", s.pose_distance_m},
       {"seed", s.seed},
       {"noise_sigma_mm", s.noise_sigma_mm},
       {"spike_rate", s.spike_rate}};
  j["head_radii_mm"] = s.head ? nlohmann::json{s.head->a, s.head->b, s.head->c} : nlohmann::json(nullptr);
  if (s.shoulders) {
    j["shoulder_halfwidth_mm"] = s.shoulders->halfwidth;
    j["shoulder_depth_mm"] = s.shoulders->depth;
    j["shoulder_height_mm"] = s.shoulders->height;
  } else {
    j["shoulder_halfwidth_mm"] = nullptr;
    j["shoulder_depth_mm"] = nullptr;
    j["shoulder_height_mm"] = nullptr;
  }
  j["bump"] = s.bump ? nlohmann::json{{"center_y_mm", s.bump->center_y_mm},
                                      {"radius_mm", s.bump->radius_mm},
                                      {"protrusion_mm", s.bump->protrusion_mm}}
                     : nlohmann::json(nullptr);
}

/// Absent keys keep defaults; an explicit null removes the head, shoulders
/// or bump. A bump may give `volume_ml` instead of `protrusion_mm`.
inline void from_json(const nlohmann::json& j, PhantomSpec& s) {
  try {
    auto num = [&](const char* key, double& out) {
      if (j.contains(key)) out = j.at(key).get<double>();
    };
    num("neck_radius_mm", s.neck_radius_mm);
    num("neck_height_mm", s.neck_height_mm);
    num("pose_distance_m", s.pose_distance_m);
    num("noise_sigma_mm", s.noise_sigma_mm);
    num("spike_rate", s.spike_rate);
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("head_radii_mm")) {
      const auto& h = j.at("head_radii_mm");
      if (h.is_null()) {
        s.head.reset();
      } else {
        if (!h.is_array() || h.size() != 3) throw Error(Errc::malformed_file, "head_radii_mm needs three values");
        s.head = HeadSpec{h[0].get<double>(), h[1].get<double>(), h[2].get<double>()};
      }
    }
    if (j.contains("shoulder_halfwidth_mm") && j.at("shoulder_halfwidth_mm").is_null()) {
      s.shoulders.reset();
    } else if (j.contains("shoulder_halfwidth_mm") || j.contains("shoulder_depth_mm") ||
               j.contains("shoulder_height_mm")) {
      ShoulderSpec sh = s.shoulders.value_or(ShoulderSpec{});
      if (j.contains("shoulder_halfwidth_mm")) sh.halfwidth = j.at("shoulder_halfwidth_mm").get<double>();
      if (j.contains("shoulder_depth_mm")) sh.depth = j.at("shoulder_depth_mm").get<double>();
      if (j.contains("shoulder_height_mm")) sh.height = j.at("shoulder_height_mm").get<double>();
      s.shoulders = sh;
    }
    if (j.contains("bump")) {
      const auto& b = j.at("bump");
      if (b.is_null()) {
        s.bump.reset();
      } else {
        BumpSpec bs;
        bs.center_y_mm = b.at("center_y_mm").get<double>();
        bs.radius_mm = b.at("radius_mm").get<double>();
        if (b.contains("protrusion_mm")) {
          bs.protrusion_mm = b.at("protrusion_mm").get<double>();
        } else {
          bs.protrusion_mm = solve_bump_protrusion(bs.radius_mm, b.at("volume_ml").get<double>());
        }
        s.bump = bs;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_file, std::string("phantom spec: ") + e.what());
  }
  s.validate();
}

inline PhantomSpec load_phantom_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::unreadable_path, path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_file, path.string() + ": " + e.what());
  }
  return j.get<PhantomSpec>();
}

}  // namespace neckvol
