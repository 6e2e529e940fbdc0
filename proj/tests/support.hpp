// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

// Fixtures shared by the unit and acceptance suites.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "prism/scene.hpp"
#include "prism/spectral.hpp"

#ifndef PRISM_SOURCE_DIR
#error "PRISM_SOURCE_DIR must be defined by the build"
#endif

namespace prism::test {

inline std::filesystem::path source_dir() { return PRISM_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }
inline std::filesystem::path scenes_dir() { return source_dir() / "scenes"; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("prism-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline Mesh quad_mesh(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, std::uint32_t material) {
  Mesh m;
  m.positions = {a, b, c, d};
  m.indices = {{0, 1, 2}, {0, 2, 3}};
  m.material = material;
  return m;
}

/// Axis-aligned closed box with outward-wound faces.
inline Mesh box_mesh(const Vec3& lo, const Vec3& hi, std::uint32_t material) {
  Mesh m;
  m.positions = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                 {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
  m.indices = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
               {3, 6, 2}, {3, 7, 6}, {0, 4, 7}, {0, 7, 3}, {1, 2, 6}, {1, 6, 5}};
  m.material = material;
  return m;
}

/// UV sphere with per-vertex normals.
inline Mesh sphere_mesh(const Vec3& centre, double radius, std::uint32_t material, int slices = 32,
                        int stacks = 16) {
  Mesh m;
  m.material = material;
  const double pi = 3.14159265358979323846;
  for (int i = 0; i <= stacks; ++i) {
    const double theta = pi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double phi = 2.0 * pi * j / slices;
      const Vec3 n{std::sin(theta) * std::cos(phi), std::cos(theta), std::sin(theta) * std::sin(phi)};
      m.positions.push_back(centre + n * radius);
      m.normals.push_back(normalize(n));
    }
  }
  auto at = [&](int i, int j) { return static_cast<std::uint32_t>(i * slices + (j % slices)); };
  for (int i = 0; i < stacks; ++i) {
    for (int j = 0; j < slices; ++j) {
      if (i != 0) m.indices.push_back({at(i, j), at(i, j + 1), at(i + 1, j + 1)});
      if (i != stacks - 1) m.indices.push_back({at(i, j), at(i + 1, j + 1), at(i + 1, j)});
    }
  }
  return m;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  while (true) {
    Vec3 v{n(rng), n(rng), n(rng)};
    const double l = length(v);
    if (l > 1e-6) return v / l;
  }
}

}  // namespace prism::test
