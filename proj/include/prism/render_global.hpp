// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "prism/render_local.hpp"
#include "prism/scene.hpp"
#include "prism/settings.hpp"

namespace prism {

struct Photon {
  Vec3 position;
  /// Propagation direction of the photon when it arrived (unit).
  Vec3 direction;
  Spectrum power;
  /// Deposited on the first surface hit straight from the light.
  bool direct = false;
};

/// Balanced kd-tree over photons. Photons keep their insertion index, which
/// breaks distance ties in queries.
class PhotonMap {
 public:
  enum class Kind : std::uint8_t { global = 0, caustic = 1 };

  struct Neighbor {
    double distance2 = 0;
    std::uint32_t index = 0;
    friend bool operator<(const Neighbor& a, const Neighbor& b) {
      return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.index < b.index);
    }
  };

  PhotonMap() = default;
  PhotonMap(Kind kind, const WavelengthGrid& grid, std::vector<Photon> photons);

  Kind kind() const { return kind_; }
  const WavelengthGrid& grid() const { return grid_; }
  std::size_t size() const { return photons_.size(); }
  bool empty() const { return photons_.empty(); }
  const std::vector<Photon>& photons() const { return photons_; }

  /// Up to k nearest photons with squared distance <= max_distance2, sorted
  /// by (distance, index).
  std::vector<Neighbor> k_nearest(const Vec3& p, std::size_t k,
                                  double max_distance2 = std::numeric_limits<double>::infinity()) const;

  /// Copy holding only photons for which `keep` is true.
  template <typename Pred>
  PhotonMap filtered(Pred keep) const {
    std::vector<Photon> out;
    for (const auto& ph : photons_) {
      if (keep(ph)) out.push_back(ph);
    }
    return PhotonMap(kind_, grid_, std::move(out));
  }

  Spectrum total_power() const;

  /// Binary dump; layout in docs/formats.md.
  std::vector<std::uint8_t> dump() const;
  static PhotonMap restore(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static PhotonMap load(const std::filesystem::path& path);

 private:
  void build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t begin, std::uint32_t end, const Vec3& p, std::size_t k,
              double& bound, std::vector<Neighbor>& heap) const;

  Kind kind_ = Kind::global;
  WavelengthGrid grid_;
  std::vector<Photon> photons_;
  std::vector<std::uint32_t> order_;  // kd layout: median of [b, e) at (b + e) / 2
  std::vector<std::uint8_t> axis_;
};

struct PhotonMaps {
  PhotonMap global;
  PhotonMap caustic;
  Spectrum emitted;  // total emitted power over all lights
  std::uint64_t emitted_count = 0;
};

/// Photon pre-pass. Deterministic for a given seed and independent of the
/// thread count. Throws std::invalid_argument if the scene has no lights.
PhotonMaps emit_photons(const Scene& scene, const GiSettings& settings, std::uint64_t seed,
                        unsigned threads = 0);

/// k-nearest density estimate: sum of F_r(w_p, wo) * power_p / (pi r^2), or
/// zero when fewer than k photons lie within `max_radius`.
Spectrum estimate_radiance(const PhotonMap& map, const Scene& scene, const Hit& hit,
                           const Vec3& wo, std::size_t k, double max_radius);

struct GiStats {
  std::size_t global_photons = 0;
  std::size_t caustic_photons = 0;
  std::size_t indirect_photons = 0;
};

/// Direct + specular (as render) plus caustic and indirect-diffuse estimates.
/// The indirect estimate ignores photons flagged `direct`, since direct light
/// is already counted by shadow rays.
SpectralImage render_gi(const Scene& scene, const RenderSettings& render_settings,
                        const GiSettings& gi_settings, const PhotonMaps& maps);
SpectralImage render_gi(const Scene& scene, const RenderSettings& render_settings,
                        const GiSettings& gi_settings, GiStats* stats = nullptr);

}  // namespace prism
