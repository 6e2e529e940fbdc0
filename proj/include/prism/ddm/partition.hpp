// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "prism/render_local.hpp"
#include "prism/scene.hpp"

namespace prism::ddm {

/// Neighbor id of a face on the outer boundary of the partition.
inline constexpr std::int32_t kExterior = -1;

/// Face order: -x, +x, -y, +y, -z, +z.
constexpr int face_index(int axis, bool positive) { return 2 * axis + (positive ? 1 : 0); }

struct SubDomain {
  std::uint32_t id = 0;
  std::array<int, 3> cell{};
  Aabb box;
  std::array<std::int32_t, 6> neighbors{kExterior, kExterior, kExterior,
                                        kExterior, kExterior, kExterior};
  /// Global ids of triangles whose bounds touch the box.
  std::vector<std::uint32_t> triangles;
  /// Estimated resident size once loaded.
  std::size_t footprint_bytes = 0;
};

struct Partition {
  Aabb box;
  std::array<int, 3> splits{1, 1, 1};
  /// Split planes per axis; splits[a] + 1 values, shared by adjacent cells.
  std::array<std::vector<double>, 3> planes;
  std::vector<SubDomain> domains;

  std::size_t size() const { return domains.size(); }
  std::uint32_t id_of(int i, int j, int k) const {
    return static_cast<std::uint32_t>(i + splits[0] * (j + splits[1] * k));
  }
  /// Cell containing `p`, clamped to the grid.
  std::uint32_t locate(const Vec3& p) const;
  std::size_t triangle_references() const;
  std::size_t largest_footprint() const;
};

/// Regular nx * ny * nz grid over the (slightly padded) scene bounds.
/// Triangles are duplicated into every cell their bounds overlap.
Partition partition(const Scene& scene, std::array<int, 3> splits);

/// A sub-domain with its geometry copied out and indexed.
struct LoadedSubDomain {
  const SubDomain* domain = nullptr;
  Bvh bvh;
};

LoadedSubDomain load_subdomain(const Scene& scene, const SubDomain& domain);

/// A ray at a sub-domain interface. The segment origin is kept as it was when
/// the ray was spawned; the entry point is origin + t_entry * direction. This
/// keeps parametric distances identical to a single-domain trace.
struct BoundaryRayRecord {
  Vec3 origin;
  Vec3 direction;
  double t_entry = 0;
  double t_min = 0;
  double t_max = std::numeric_limits<double>::infinity();
  Spectrum throughput;
  std::uint32_t pixel = 0;
  std::uint64_t path_key = 0;
  std::int32_t depth = 0;
  PathTag tag = PathTag::camera;
  std::int32_t destination = 0;
  std::uint32_t crossings = 0;

  Vec3 entry() const { return origin + direction * t_entry; }
  Ray ray() const;
  static BoundaryRayRecord from_ray(const Ray& r, std::int32_t destination);
};

/// Shadow segment still to be tested past a sub-domain boundary. Carries the
/// contribution that becomes visible if nothing blocks the segment.
struct ShadowProbeRecord {
  Vec3 origin;
  Vec3 direction;
  double t_entry = 0;
  double t_min = 0;
  double t_max = 0;
  Spectrum contribution;
  std::uint32_t pixel = 0;
  std::uint64_t path_key = 0;  // parent ray key with the light index in the low bits
  std::int32_t destination = 0;
  std::uint32_t crossings = 0;
};

struct Contribution {
  std::uint32_t pixel = 0;
  std::uint64_t path_key = 0;
  Spectrum value;
};

/// Result of tracing one record through one sub-domain.
struct TraceOutcome {
  enum class Kind { shaded, crossing, spawn_set, escaped, missed };
  Kind kind = Kind::missed;
  std::optional<Hit> hit;
  /// Light terms already known to be visible (segment stayed local or left the scene).
  std::vector<Contribution> contributions;
  /// Shadow segments that must continue in a neighbor.
  std::vector<ShadowProbeRecord> probes;
  /// Specular continuations; destination is the sub-domain holding their start point.
  std::vector<BoundaryRayRecord> local;
  /// The ray itself leaving through an interior face.
  std::optional<BoundaryRayRecord> crossing;
};

struct ShadowMode {
  /// Only test sub-domain-local occluders; never forwards probes.
  bool approximate = false;
};

/// Traces `record` inside `sd`: nearest hit before the box exit is shaded and
/// expanded exactly as the single-domain tracer would; otherwise the record
/// crosses to the face neighbor (or escapes at an exterior face).
/// Throws std::logic_error if the entry point lies outside the box beyond tolerance.
TraceOutcome trace_in_subdomain(const Scene& scene, const Partition& part,
                                const LoadedSubDomain& sd, const BoundaryRayRecord& record,
                                const RenderSettings& settings, ShadowMode mode = {});

struct ProbeResult {
  enum class Kind { occluded, visible, forwarded };
  Kind kind = Kind::occluded;
  std::optional<ShadowProbeRecord> next;
};

ProbeResult resolve_probe(const Partition& part, const LoadedSubDomain& sd,
                          const ShadowProbeRecord& probe);

}  // namespace prism::ddm
