// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace prism {

/// Termination and robustness controls for inverse ray tracing.
struct RenderSettings {
  /// Deepest specular bounce traced; 0 traces primary rays only.
  int max_bounces = 5;
  /// Specular rays whose max spectral throughput drops below this are not spawned.
  double throughput_threshold = 1e-3;
  /// Shadow / secondary-ray offset as a fraction of the scene diagonal.
  double shadow_epsilon_relative = 1e-4;
  /// Worker threads for pixel-parallel rendering; 0 picks hardware concurrency.
  unsigned threads = 0;
};

/// Photon-mapping pre-pass and density-estimation parameters.
struct GiSettings {
  std::uint64_t photons_per_light = 100000;
  int k_nearest = 50;
  int max_photon_bounces = 8;
  /// Gather radius cap as a fraction of the scene diagonal.
  double max_search_radius_relative = 0.05;
  std::uint64_t seed = 1;
  std::uint64_t photons_per_batch = 4096;
};

// Path keys order the contributions of one pixel in depth-first order:
// 2 bits per bounce level (1 = reflected, 2 = refracted) in the top 48 bits,
// the light index (or kRayKeySuffix for the ray itself) in the low 16 bits.
// Primary rays carry key kRayKeySuffix.
inline constexpr int kMaxPathDepth = 23;
inline constexpr std::uint64_t kRayKeySuffix = 0xFFFF;
inline constexpr std::uint64_t kMaxLights = 0xFFFE;

constexpr std::uint64_t child_path_key(std::uint64_t parent_key, int child_depth, unsigned branch) {
  const int shift = 16 + 2 * (24 - child_depth);
  return (parent_key & ~kRayKeySuffix) | (std::uint64_t{branch} << shift) | kRayKeySuffix;
}

}  // namespace prism
