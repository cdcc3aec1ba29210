#pragma once

// Counter-based random streams. A value is a pure function of
// (key..., counter), so per-pixel noise is identical whether a frame is
// rendered serially or in parallel.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace neckvol::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

// Uniform in the open interval (0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  return to_unit(mix({key, counter}));
}

// Box-Muller on two independent uniforms of the same counter.
inline double normal(std::uint64_t key, std::uint64_t counter) noexcept {
  const double u1 = to_unit(mix({key, counter, 1}));
  const double u2 = to_unit(mix({key, counter, 2}));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace neckvol::rng
