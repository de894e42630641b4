#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rcc {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

using Engine = std::mt19937_64;

/// Seed plus labelled sub-streams. Two streams with different labels (or
/// indices) are statistically independent; the same (seed, label, index)
/// always yields the same sequence.
struct RngConfig {
  std::uint64_t seed = 0;

  Engine stream(std::string_view label, std::uint64_t index = 0) const {
    std::uint64_t s = detail::splitmix64(seed ^ detail::fnv1a(label));
    s = detail::splitmix64(s + index);
    return Engine(s);
  }

  RngConfig child(std::string_view label, std::uint64_t index = 0) const {
    return RngConfig{detail::splitmix64(
        detail::splitmix64(seed ^ detail::fnv1a(label)) + index)};
  }
};

// Conventional stream labels.
inline constexpr std::string_view kDataStream = "data";
inline constexpr std::string_view kNoiseStream = "noise";

}  // namespace rcc
