#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace udasa {

// Deterministic, platform-independent hashing and sampling primitives.
// std::hash and the standard <random> distributions are implementation
// defined, so everything that feeds persisted artifacts goes through these.

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

inline std::mt19937_64 seeded_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

// Engine split for one named unit of work (a prompt, a stage, a sweep cell).
inline std::mt19937_64 engine_for(std::uint64_t seed, std::string_view tag) {
  return std::mt19937_64(mix64(seed, fnv1a64(tag)));
}

// Unbiased draw in [0, n) by masked rejection; bit-stable across platforms
// because mt19937_64 output is fully specified.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n <= 1) return 0;
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  while (true) {
    std::uint64_t v = rng() & mask;
    if (v < n) return static_cast<std::size_t>(v);
  }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on our own uniforms.
inline double gaussian(std::mt19937_64& rng) {
  double u1 = uniform_double(rng);
  while (u1 <= 0.0) u1 = uniform_double(rng);
  const double u2 = uniform_double(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace udasa
