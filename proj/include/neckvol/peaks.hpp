#pragma once

// 1-D peak finding with topographic prominence.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace neckvol {

struct Peak {
  std::size_t index = 0;  // plateau midpoint, rounded down
  double height = 0.0;
  double prominence = 0.0;
};

/// Local maxima of a signal. A maximum is a sample (or flat run of samples)
/// with strictly lower neighbors on both sides; signal endpoints never count.
/// Prominence is the height above the higher of the two lowest points met
/// while walking outward until a strictly higher sample or the signal end.
inline std::vector<Peak> find_peaks(std::span<const double> x) {
  std::vector<Peak> peaks;
  const std::size_t n = x.size();
  if (n < 3) return peaks;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      std::size_t j = i;
      while (j + 1 < n && x[j + 1] == x[i]) ++j;
      if (j + 1 < n && x[j + 1] < x[i]) {
        peaks.push_back({(i + j) / 2, x[i], 0.0});
        i = j + 1;
        continue;
      }
      i = j + 1;
      continue;
    }
    ++i;
  }

  for (auto& p : peaks) {
    double left_min = p.height;
    for (std::size_t k = p.index + 1; k-- > 0;) {
      if (x[k] > p.height) break;
      left_min = std::min(left_min, x[k]);
    }
    double right_min = p.height;
    for (std::size_t k = p.index; k < n; ++k) {
      if (x[k] > p.height) break;
      right_min = std::min(right_min, x[k]);
    }
    p.prominence = p.height - std::max(left_min, right_min);
  }
  return peaks;
}

/// The `count` most prominent peaks (ties: lower index first), returned in
/// index order.
inline std::vector<Peak> most_prominent(std::vector<Peak> peaks, std::size_t count) {
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    return a.prominence != b.prominence ? a.prominence > b.prominence : a.index < b.index;
  });
  if (peaks.size() > count) peaks.resize(count);
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.index < b.index; });
  return peaks;
}

}  // namespace neckvol
