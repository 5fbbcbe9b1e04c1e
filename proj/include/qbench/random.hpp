#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qbench {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Platform-independent string hash (FNV-1a, 64 bit).
inline constexpr std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {
inline std::uint64_t seed_part(std::uint64_t v) { return v; }
inline std::uint64_t seed_part(std::int64_t v) { return static_cast<std::uint64_t>(v); }
inline std::uint64_t seed_part(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }
inline std::uint64_t seed_part(unsigned v) { return v; }
inline std::uint64_t seed_part(std::string_view v) { return hash_string(v); }
inline std::uint64_t seed_part(const char* v) { return hash_string(v); }
inline std::uint64_t seed_part(double v) {
  // Quantize so 1.5 and 1.5000000000000002 map to the same stream.
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(v * 1e6 + (v >= 0 ? 0.5 : -0.5)));
}
}  // namespace detail

/// Derives an independent child seed from a base seed and any number of tags.
template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t base, const Tags&... tags) {
  std::uint64_t h = mix64(base);
  ((h = mix64(h ^ detail::seed_part(tags))), ...);
  return h;
}

}  // namespace qbench
