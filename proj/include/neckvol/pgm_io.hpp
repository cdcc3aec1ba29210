#pragma once

// 16-bit binary PGM (P5) depth frames plus a JSON sidecar.
//
// Samples are stored big-endian, one uint16 per pixel, in integer
// millimeters. The sidecar `<name>.meta.json` next to `<name>.pgm` carries
// mm_per_pixel, distance_m and view.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neckvol/depth_frame.hpp"
#include "neckvol/error.hpp"

namespace neckvol {

struct FrameMeta {
  double mm_per_pixel = 1.0;
  double distance_m = 1.0;
  std::string view = "front";
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& pgm) {
  auto p = pgm;
  p.replace_extension(".meta.json");
  return p;
}

inline void write_meta(const FrameMeta& meta, const std::filesystem::path& pgm) {
  nlohmann::json j{{"mm_per_pixel", meta.mm_per_pixel}, {"distance_m", meta.distance_m}, {"view", meta.view}};
  std::ofstream out(sidecar_path(pgm));
  if (!out) throw Error(Errc::unwritable_path, sidecar_path(pgm).string());
  out << j.dump(2) << '\n';
}

inline std::optional<FrameMeta> read_meta(const std::filesystem::path& pgm) {
  const auto path = sidecar_path(pgm);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
    FrameMeta meta;
    meta.mm_per_pixel = j.at("mm_per_pixel").get<double>();
    meta.distance_m = j.value("distance_m", 1.0);
    meta.view = j.value("view", std::string("front"));
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_file, path.string() + ": " + e.what());
  }
}

namespace detail {

// Reads one whitespace-delimited header token, skipping '#' comments.
inline std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  while (ch != EOF && !std::isspace(ch)) {
    tok.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  return tok;
}

inline long pgm_number(std::istream& in, const char* what) {
  const auto tok = pgm_token(in);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(Errc::malformed_header, std::string("bad ") + what + " '" + tok + "'");
  }
  return std::stol(tok);
}

}  // namespace detail

/// Reads a P5 16-bit PGM. `mm_per_pixel` overrides the sidecar; without
/// either the scale is unknown and reading fails.
inline DepthFrame read_frame(const std::filesystem::path& path, std::optional<double> mm_per_pixel = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::unreadable_path, path.string());

  if (detail::pgm_token(in) != "P5") throw Error(Errc::malformed_header, path.string() + ": missing P5 magic");
  const long width = detail::pgm_number(in, "width");
  const long height = detail::pgm_number(in, "height");
  const long maxval = detail::pgm_number(in, "maxval");
  if (width == 0 || height == 0) throw Error(Errc::zero_dimensions, path.string());
  if (maxval < 256 || maxval > 65535) {
    throw Error(Errc::unsupported_bit_depth, path.string() + ": maxval " + std::to_string(maxval) + " is not 16-bit");
  }

  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<unsigned char> raw(2 * n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error(Errc::malformed_file, path.string() + ": truncated pixel data");
  }
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) samples[i] = static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);

  if (!mm_per_pixel) {
    if (auto meta = read_meta(path)) mm_per_pixel = meta->mm_per_pixel;
  }
  if (!mm_per_pixel) throw Error(Errc::invalid_argument, path.string() + ": mm_per_pixel not given and no sidecar");
  return DepthFrame(static_cast<std::size_t>(width), static_cast<std::size_t>(height), *mm_per_pixel,
                    std::move(samples));
}

/// Writes a P5 16-bit PGM. Samples are rounded to integer millimeters, so
/// read_frame(write_frame(f)) == f holds exactly for integer-valued frames
/// (everything a sensor or a previous read produces).
inline void write_frame(const DepthFrame& frame, const std::filesystem::path& path) {
  if (frame.width() == 0 || frame.height() == 0) throw Error(Errc::zero_dimensions, "refusing to write empty frame");
  std::vector<unsigned char> raw(2 * frame.size());
  auto samples = frame.samples();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = std::round(samples[i]);
    if (v > 65535.0) throw Error(Errc::invalid_argument, "depth exceeds 16-bit range");
    const auto u = static_cast<std::uint16_t>(v);
    raw[2 * i] = static_cast<unsigned char>(u >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(u & 0xff);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::unwritable_path, path.string());
  out << "P5\n" << frame.width() << ' ' << frame.height() << "\n65535\n";
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(Errc::unwritable_path, path.string());
}

inline void write_frame(const DepthFrame& frame, const std::filesystem::path& path, const FrameMeta& meta) {
  write_frame(frame, path);
  write_meta(meta, path);
}

/// Rounds every sample to integer millimeters: the value domain of the file
/// format.
inline DepthFrame quantize_mm(const DepthFrame& frame) {
  std::vector<double> out(frame.samples().begin(), frame.samples().end());
  for (double& v : out) v = std::round(v);
  return DepthFrame(frame.width(), frame.height(), frame.mm_per_pixel(), std::move(out));
}

}  // namespace neckvol
