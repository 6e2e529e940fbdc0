// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "prism/scene.hpp"
#include "prism/settings.hpp"
#include "prism/spectral.hpp"

namespace prism {

/// width x height pixels, `grid.bin_count` doubles per pixel, row-major with
/// row 0 at the top.
class SpectralImage {
 public:
  SpectralImage() = default;
  SpectralImage(int width, int height, const WavelengthGrid& grid);

  int width() const { return width_; }
  int height() const { return height_; }
  const WavelengthGrid& grid() const { return grid_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::span<double> pixel(std::size_t index);
  std::span<const double> pixel(std::size_t index) const;
  Spectrum spectrum(std::size_t index) const;
  void set(std::size_t index, const Spectrum& s);

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  friend bool operator==(const SpectralImage&, const SpectralImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  WavelengthGrid grid_;
  std::vector<double> data_;
};

/// Largest |a - b| over all samples; throws if dimensions or grids differ.
double max_abs_difference(const SpectralImage& a, const SpectralImage& b);

/// Direction toward the light, distance falloff and the shadow segment.
struct LightGeometry {
  Vec3 to_light;
  double falloff = 1.0;
  ShadowQuery shadow;
};

LightGeometry light_geometry(const Vec3& position, const Light& light, double epsilon);

/// Reflected radiance from all visible lights at `hit` toward `wo`:
/// sum over lights of F_r * L_s * max(n.w_s, 0) * falloff (1/d^2 for point lights).
Spectrum shade_direct(const Scene& scene, const Hit& hit, const Vec3& wo);

/// One light's unoccluded contribution, already weighted by ray throughput.
struct LightSample {
  std::uint32_t light = 0;
  Spectrum contribution;
  ShadowQuery shadow;
};

/// What a surface interaction produces: shadow-tested light terms followed by
/// specular continuations (reflected first, then refracted).
struct HitExpansion {
  std::vector<LightSample> lights;
  std::vector<Ray> children;
};

/// Shared by the monolithic tracer and the domain-decomposed engine so both
/// make identical floating-point decisions.
HitExpansion expand_hit(const Scene& scene, const Ray& ray, const Hit& hit,
                        const RenderSettings& settings);

/// Extra per-hit radiance (used by photon mapping). Called after the light
/// terms, before recursing; the result is added with key suffix kRayKeySuffix.
using HitExtra = std::function<void(const Ray& ray, const Hit& hit, Spectrum& acc)>;

struct TraceCounters {
  std::uint64_t rays = 0;
  std::uint64_t shadow_rays = 0;
};

/// Depth-first trace accumulating into `acc` in path-key order.
void trace_into(const Scene& scene, const Ray& ray, const RenderSettings& settings,
                Spectrum& acc, const HitExtra* extra = nullptr, TraceCounters* counters = nullptr);

Spectrum trace(const Scene& scene, const Ray& ray, const RenderSettings& settings);

/// Runs `fn(row)` for every row on up to `threads` threads (0: hardware concurrency).
void parallel_rows(int rows, unsigned threads, const std::function<void(int)>& fn);

/// One trace per pixel centre. Output is independent of the thread count.
SpectralImage render(const Scene& scene, const RenderSettings& settings,
                     const HitExtra* extra = nullptr, TraceCounters* counters = nullptr);
SpectralImage render(const Scene& scene);

}  // namespace prism
