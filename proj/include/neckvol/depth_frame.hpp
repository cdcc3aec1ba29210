#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neckvol/error.hpp"

namespace neckvol {

/// Rectangular grid of depth samples in millimeters, row-major, 0 = no data.
///
/// A frame is an immutable value: every operation in the library returns a
/// new frame. `mm_per_pixel` is the single isotropic lateral scale of the
/// capture plane (orthographic model).
class DepthFrame {
 public:
  DepthFrame() = default;

  DepthFrame(std::size_t width, std::size_t height, double mm_per_pixel, std::vector<double> samples)
      : width_(width), height_(height), mm_per_pixel_(mm_per_pixel), samples_(std::move(samples)) {
    validate();
  }

  DepthFrame(std::size_t width, std::size_t height, double mm_per_pixel, double fill = 0.0)
      : DepthFrame(width, height, mm_per_pixel, std::vector<double>(width * height, fill)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double mm_per_pixel() const noexcept { return mm_per_pixel_; }

  std::span<const double> samples() const noexcept { return samples_; }
  std::span<const double> row(std::size_t r) const noexcept { return {samples_.data() + r * width_, width_}; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return samples_[r * width_ + c]; }

  double at(std::size_t r, std::size_t c) const {
    if (r >= height_ || c >= width_) {
      throw Error(Errc::out_of_bounds, "pixel (" + std::to_string(r) + ", " + std::to_string(c) + ") outside frame");
    }
    return (*this)(r, c);
  }

  std::size_t count_valid() const noexcept {
    std::size_t n = 0;
    for (double v : samples_) n += v > 0.0 ? 1 : 0;
    return n;
  }

  // Moves the sample buffer out; the frame is left empty.
  std::vector<double> release() && { return std::move(samples_); }

  friend bool operator==(const DepthFrame&, const DepthFrame&) = default;

 private:
  void validate() const {
    if (samples_.size() != width_ * height_) {
      throw Error(Errc::dimension_mismatch, "sample count " + std::to_string(samples_.size()) + " != " +
                                                std::to_string(width_) + "x" + std::to_string(height_));
    }
    if (!(mm_per_pixel_ > 0.0) || !std::isfinite(mm_per_pixel_)) {
      throw Error(Errc::invalid_argument, "mm_per_pixel must be positive and finite");
    }
    for (double v : samples_) {
      if (!std::isfinite(v) || v < 0.0) throw Error(Errc::invalid_argument, "depth samples must be finite and >= 0");
    }
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  double mm_per_pixel_ = 1.0;
  std::vector<double> samples_;
};

struct PixelRect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

inline DepthFrame crop(const DepthFrame& frame, const PixelRect& rect) {
  if (rect.height == 0 || rect.width == 0) throw Error(Errc::zero_dimensions, "crop rectangle is empty");
  if (rect.row + rect.height > frame.height() || rect.col + rect.width > frame.width()) {
    throw Error(Errc::out_of_bounds, "crop rectangle exceeds frame bounds");
  }
  std::vector<double> out;
  out.reserve(rect.width * rect.height);
  for (std::size_t r = 0; r < rect.height; ++r) {
    auto src = frame.row(rect.row + r).subspan(rect.col, rect.width);
    out.insert(out.end(), src.begin(), src.end());
  }
  return DepthFrame(rect.width, rect.height, frame.mm_per_pixel(), std::move(out));
}

inline DepthFrame crop(const DepthFrame& frame, std::size_t row, std::size_t col, std::size_t height,
                       std::size_t width) {
  return crop(frame, PixelRect{row, col, height, width});
}

/// Neck patch cut from a reference session, used to locate the neck in later
/// captures.
struct NeckTemplate {
  static constexpr std::size_t kMinSide = 8;

  DepthFrame patch;
  std::size_t origin_row = 0;
  std::size_t origin_col = 0;
};

inline NeckTemplate make_template(const DepthFrame& reference, const PixelRect& rect) {
  if (rect.height < NeckTemplate::kMinSide || rect.width < NeckTemplate::kMinSide) {
    throw Error(Errc::invalid_argument, "template sides must be >= 8 pixels");
  }
  return NeckTemplate{crop(reference, rect), rect.row, rect.col};
}

}  // namespace neckvol
