#pragma once

// Normalized correlation coefficient matching: locating a reference neck
// template in a new frame and aligning the back view onto the front view.

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <optional>
#include <vector>

#include "neckvol/depth_frame.hpp"
#include "neckvol/error.hpp"
#include "neckvol/parallel.hpp"

namespace neckvol {

enum class NccNormalization {
  // Zero-mean correlation divided by both centered norms; scores in [-1, 1].
  full,
  // Raw template product over the centered image energy only, as the
  // formula is commonly printed. Scores are unbounded.
  image_energy_only,
};

struct NccOptions {
  NccNormalization normalization = NccNormalization::full;
  double min_valid_fraction = 0.5;
  bool keep_score_map = false;
};

struct MatchResult {
  std::size_t row = 0;  // template top-left corner in the image
  std::size_t col = 0;
  double score = 0.0;
  // Row-major (image.height - K + 1) x (image.width - L + 1); skipped
  // placements hold -infinity.
  std::optional<std::vector<double>> score_map;
  std::size_t map_rows = 0;
  std::size_t map_cols = 0;
};

namespace detail {

inline constexpr double kSkipped = -std::numeric_limits<double>::infinity();

// Accumulates one correlation over a set of (image, template) pairs.
// Pairs with a zero image sample are excluded by the caller.
struct NccAccumulator {
  std::vector<double> xs, hs;

  void clear() {
    xs.clear();
    hs.clear();
  }
  void add(double x, double h) {
    xs.push_back(x);
    hs.push_back(h);
  }

  // Two-pass centered sums; returns kSkipped for a degenerate window.
  double score(NccNormalization norm) const {
    const double n = static_cast<double>(xs.size());
    if (xs.size() < 2) return kSkipped;
    double mx = 0.0, mh = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      mh += hs[i];
    }
    mx /= n;
    mh /= n;
    double sxx = 0.0, shh = 0.0, sxh = 0.0, sxh_raw = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double dx = xs[i] - mx;
      const double dh = hs[i] - mh;
      sxx += dx * dx;
      shh += dh * dh;
      sxh += dx * dh;
      sxh_raw += xs[i] * hs[i];
    }
    // Variance below round-off of the mean level counts as constant.
    const double floor_x = 1e-12 * n * (mx * mx + 1.0);
    if (!(sxx > floor_x)) return kSkipped;
    if (norm == NccNormalization::image_energy_only) return sxh_raw / std::sqrt(sxx);
    const double floor_h = 1e-12 * n * (mh * mh + 1.0);
    if (!(shh > floor_h)) return kSkipped;
    return sxh / std::sqrt(sxx * shh);
  }
};

}  // namespace detail

/// Scores every placement of the template fully inside the image and returns
/// the best one (ties: smallest row, then smallest column). Zero image
/// samples are excluded from the sums; placements with fewer than
/// min_valid_fraction valid image samples are skipped.
inline MatchResult ncc_match(const DepthFrame& image, const NeckTemplate& tmpl, const NccOptions& opt = {}) {
  const auto& h = tmpl.patch;
  const std::size_t K = h.height();
  const std::size_t L = h.width();
  if (K == 0 || L == 0 || K >= image.height() || L >= image.width()) {
    throw Error(Errc::template_too_large, "template must be strictly smaller than the image");
  }
  const std::size_t rows = image.height() - K + 1;
  const std::size_t cols = image.width() - L + 1;
  const auto need = static_cast<std::size_t>(std::ceil(opt.min_valid_fraction * static_cast<double>(K * L)));

  std::vector<double> map(rows * cols, detail::kSkipped);
  parallel_for(0, rows, [&](std::size_t m) {
    detail::NccAccumulator acc;
    acc.xs.reserve(K * L);
    acc.hs.reserve(K * L);
    for (std::size_t n = 0; n < cols; ++n) {
      acc.clear();
      for (std::size_t k = 0; k < K; ++k) {
        const auto xr = image.row(m + k).subspan(n, L);
        const auto hr = h.row(k);
        for (std::size_t l = 0; l < L; ++l) {
          if (xr[l] > 0.0) acc.add(xr[l], hr[l]);
        }
      }
      if (acc.xs.size() >= need) map[m * cols + n] = acc.score(opt.normalization);
    }
  });

  MatchResult best;
  best.score = detail::kSkipped;
  for (std::size_t m = 0; m < rows; ++m) {
    for (std::size_t n = 0; n < cols; ++n) {
      if (map[m * cols + n] > best.score) {
        best.score = map[m * cols + n];
        best.row = m;
        best.col = n;
      }
    }
  }
  if (best.score == detail::kSkipped) {
    throw Error(Errc::degenerate_match, "no placement has a defined correlation (constant or empty image)");
  }
  best.map_rows = rows;
  best.map_cols = cols;
  if (opt.keep_score_map) best.score_map = std::move(map);
  return best;
}

/// Integer translation with zero fill: out(r, c) = in(r - dr, c - dc).
inline DepthFrame shift_frame(const DepthFrame& frame, int drow, int dcol) {
  const auto h = static_cast<long>(frame.height());
  const auto w = static_cast<long>(frame.width());
  std::vector<double> out(frame.size(), 0.0);
  for (long r = 0; r < h; ++r) {
    const long sr = r - drow;
    if (sr < 0 || sr >= h) continue;
    for (long c = 0; c < w; ++c) {
      const long sc = c - dcol;
      if (sc < 0 || sc >= w) continue;
      out[static_cast<std::size_t>(r * w + c)] = frame(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
    }
  }
  return DepthFrame(frame.width(), frame.height(), frame.mm_per_pixel(), std::move(out));
}

struct AlignOptions {
  int max_shift_px = 20;
};

struct AlignResult {
  DepthFrame aligned;
  int shift_row = 0;
  int shift_col = 0;
  double score = 0.0;
};

/// Slides the back frame over the front frame within +-max_shift_px and
/// keeps the translation with the highest correlation over the front's valid
/// pixels (ties: smallest |shift|, then row, then column).
inline AlignResult align_back_to_front(const DepthFrame& front, const DepthFrame& back, const AlignOptions& opt = {}) {
  if (front.width() != back.width() || front.height() != back.height()) {
    throw Error(Errc::dimension_mismatch, "front and back frames differ in size");
  }
  if (front.count_valid() == 0 || back.count_valid() == 0) {
    throw Error(Errc::degenerate_match, "cannot align an all-zero frame");
  }
  const int s = opt.max_shift_px;
  if (s < 0) throw Error(Errc::invalid_argument, "max_shift_px must be >= 0");
  const auto side = static_cast<std::size_t>(2 * s + 1);
  const auto h = static_cast<long>(front.height());
  const auto w = static_cast<long>(front.width());

  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < front.size(); ++i) {
    if (front.samples()[i] > 0.0) valid.push_back(i);
  }

  std::vector<double> scores(side * side, detail::kSkipped);
  parallel_for(0, side * side, [&](std::size_t k) {
    const int dr = static_cast<int>(k / side) - s;
    const int dc = static_cast<int>(k % side) - s;
    detail::NccAccumulator acc;
    acc.xs.reserve(valid.size());
    acc.hs.reserve(valid.size());
    for (auto i : valid) {
      const long r = static_cast<long>(i) / w - dr;
      const long c = static_cast<long>(i) % w - dc;
      const double b = (r >= 0 && r < h && c >= 0 && c < w)
                           ? back(static_cast<std::size_t>(r), static_cast<std::size_t>(c))
                           : 0.0;
      acc.add(front.samples()[i], b);
    }
    scores[k] = acc.score(NccNormalization::full);
  });

  int best_dr = 0, best_dc = 0;
  double best = detail::kSkipped;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const int dr = static_cast<int>(k / side) - s;
    const int dc = static_cast<int>(k % side) - s;
    const bool better = scores[k] > best ||
                        (scores[k] == best && best != detail::kSkipped &&
                         std::abs(dr) + std::abs(dc) < std::abs(best_dr) + std::abs(best_dc));
    if (better) {
      best = scores[k];
      best_dr = dr;
      best_dc = dc;
    }
  }
  if (best == detail::kSkipped) throw Error(Errc::degenerate_match, "no shift has a defined correlation");
  return AlignResult{shift_frame(back, best_dr, best_dc), best_dr, best_dc, best};
}

}  // namespace neckvol
