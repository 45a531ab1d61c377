#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fdrcast::util {

/// Engine used everywhere randomness enters the toolkit. The name is written
/// into trace manifests.
using Engine = std::mt19937_64;
inline constexpr const char* kEngineName = "mt19937_64/u53";

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double unit_uniform(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform double in [-limit, limit).
inline double symmetric_uniform(Engine& g, double limit) {
  return limit * (2.0 * unit_uniform(g) - 1.0);
}

/// SplitMix64 finaliser.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of seeds, e.g. a per-trial seed from the
/// master seed and the trial's hyperparameters.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(master);
  for (auto p : parts) h = mix64(h ^ p);
  return h;
}

}  // namespace fdrcast::util
