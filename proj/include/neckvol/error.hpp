#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace neckvol {

// Every failure the library reports carries one of these codes. The CLI maps
// them onto exit codes (I/O vs. pipeline/contract failures).
enum class Errc {
  malformed_header,
  unsupported_bit_depth,
  zero_dimensions,
  unreadable_path,
  unwritable_path,
  malformed_file,
  out_of_bounds,
  dimension_mismatch,
  empty_input,
  invalid_argument,
  template_too_large,
  degenerate_match,
  no_edges,
  no_valid_depth,
  invalid_gap,
  too_few_points,
  empty_cloud,
  window_too_large,
  no_local_minimum,
  flat_profile,
  voxel_too_coarse,
  phantom_too_large,
  parameter_mismatch,
  pipeline_failure,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_header: return "malformed_header";
    case Errc::unsupported_bit_depth: return "unsupported_bit_depth";
    case Errc::zero_dimensions: return "zero_dimensions";
    case Errc::unreadable_path: return "unreadable_path";
    case Errc::unwritable_path: return "unwritable_path";
    case Errc::malformed_file: return "malformed_file";
    case Errc::out_of_bounds: return "out_of_bounds";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::empty_input: return "empty_input";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::template_too_large: return "template_too_large";
    case Errc::degenerate_match: return "degenerate_match";
    case Errc::no_edges: return "no_edges";
    case Errc::no_valid_depth: return "no_valid_depth";
    case Errc::invalid_gap: return "invalid_gap";
    case Errc::too_few_points: return "too_few_points";
    case Errc::empty_cloud: return "empty_cloud";
    case Errc::window_too_large: return "window_too_large";
    case Errc::no_local_minimum: return "no_local_minimum";
    case Errc::flat_profile: return "flat_profile";
    case Errc::voxel_too_coarse: return "voxel_too_coarse";
    case Errc::phantom_too_large: return "phantom_too_large";
    case Errc::parameter_mismatch: return "parameter_mismatch";
    case Errc::pipeline_failure: return "pipeline_failure";
  }
  return "unknown";
}

// File-system and file-format problems, as opposed to contract violations.
constexpr bool is_io_error(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_header:
    case Errc::unsupported_bit_depth:
    case Errc::unreadable_path:
    case Errc::unwritable_path:
    case Errc::malformed_file:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace neckvol
