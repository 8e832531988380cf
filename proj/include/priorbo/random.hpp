#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace priorbo {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a path of indices.
/// Order matters: derive_seed(s, {a, b}) != derive_seed(s, {b, a}) in general.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(base);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Named stream tags so independent consumers of one seed never collide.
enum class Stream : std::uint64_t {
  kSelection = 0x5e1ec7,
  kLatinHypercube = 0x1a7c,
  kNoise = 0x0153,
  kDensity = 0xde75,
  kPrior = 0x9104,
  kEi = 0xe1,
};

inline std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index = 0) noexcept {
  return derive_seed(base, {static_cast<std::uint64_t>(stream), index});
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace priorbo
