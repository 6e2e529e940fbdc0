// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "prism/ddm/partition.hpp"
#include "prism/ddm/transport.hpp"
#include "prism/ddm/wire.hpp"
#include "prism/render_local.hpp"

namespace prism::ddm {

/// Invalid run configuration (bad worker count, budget too small, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TransportKind { in_process, socket };

struct DdmConfig {
  std::array<int, 3> splits{1, 1, 1};
  int workers = 1;
  /// Resident sub-domain bytes allowed per worker.
  std::size_t budget_bytes = std::numeric_limits<std::size_t>::max();
  /// A loaded sub-domain with fewer pending records than this may be evicted...
  std::size_t unload_low = 32;
  /// ...in favour of an unloaded one whose backlog exceeds this.
  std::size_t unload_high = 256;
  /// Sort each pixel's contributions by path key before summing (bit-exact).
  bool ordered = true;
  /// Local-only shadow tests; results differ from the single-domain render.
  bool approximate_shadows = false;
  TransportKind transport = TransportKind::in_process;
  DelayInjection delays;
  /// Records processed between status reports.
  std::size_t batch_size = 64;
  /// Per-record crossing guard; 0 picks 4 * (nx + ny + nz) + 8.
  std::uint32_t max_crossings = 0;
  /// Let the coordinator move sub-domains to idle workers.
  bool migration = true;
  /// Abort if no message arrives for this long.
  std::chrono::milliseconds watchdog{std::chrono::minutes(10)};
};

/// Versioned sub-domain -> worker map.
class Registry {
 public:
  Registry() = default;
  explicit Registry(std::vector<std::uint32_t> owners) : owners_(std::move(owners)) {}

  /// Throws ProtocolError for an id that names no sub-domain.
  std::uint32_t owner(std::int32_t domain) const;
  std::uint64_t version() const { return version_; }
  std::size_t size() const { return owners_.size(); }
  /// Applies updates newer than the current version; returns whether it did.
  bool apply(const OwnershipUpdate& update);
  const std::vector<std::uint32_t>& owners() const { return owners_; }

 private:
  std::vector<std::uint32_t> owners_;
  std::uint64_t version_ = 0;
};

/// Initial owners: sub-domains sorted by footprint (largest first, then id)
/// dealt round-robin to workers.
std::vector<std::uint32_t> assign_homes(const Partition& part, int workers);

/// Where a record goes: a worker index, or the gatherer for exterior destinations.
struct RouteTarget {
  bool gatherer = false;
  std::uint32_t worker = 0;
};
RouteTarget route(const BoundaryRayRecord& record, const Registry& registry);

struct LedgerCounters {
  std::uint64_t rays_created = 0;
  std::uint64_t rays_completed = 0;
  std::uint64_t probes_created = 0;
  std::uint64_t probes_completed = 0;
  std::uint64_t duplicate_ids = 0;

  std::int64_t in_flight() const {
    return static_cast<std::int64_t>(rays_created + probes_created) -
           static_cast<std::int64_t>(rays_completed + probes_completed);
  }
};

struct RunStats {
  LedgerCounters ledger;
  std::uint64_t primary_rays = 0;
  std::uint64_t contributions = 0;
  std::uint64_t duplicate_contributions = 0;
  std::uint64_t migrations = 0;
  std::size_t domains = 0;
  std::size_t triangle_references = 0;
  std::vector<WorkerCounters> workers;
  WorkerCounters total;
  double wall_seconds = 0;
};

/// Domain-decomposed render of `scene` (local illumination). Throws
/// ConfigError for invalid configurations, ProtocolError on protocol faults.
SpectralImage run_distributed(const Scene& scene, const DdmConfig& config,
                              const RenderSettings& settings, RunStats* stats = nullptr);

}  // namespace prism::ddm
