// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <stdexcept>
#include <string>

#include "prism/ddm/partition.hpp"

namespace prism::ddm {

std::uint32_t Partition::locate(const Vec3& p) const {
  std::array<int, 3> c{};
  for (int a = 0; a < 3; ++a) {
    const auto& pl = planes[a];
    // Last plane index i with pl[i] <= p, clamped to a valid cell.
    const auto it = std::upper_bound(pl.begin(), pl.end(), p[a]);
    const int i = static_cast<int>(it - pl.begin()) - 1;
    c[a] = std::clamp(i, 0, splits[a] - 1);
  }
  return id_of(c[0], c[1], c[2]);
}

std::size_t Partition::triangle_references() const {
  std::size_t n = 0;
  for (const auto& d : domains) n += d.triangles.size();
  return n;
}

std::size_t Partition::largest_footprint() const {
  std::size_t m = 0;
  for (const auto& d : domains) m = std::max(m, d.footprint_bytes);
  return m;
}

Partition partition(const Scene& scene, std::array<int, 3> splits) {
  for (int s : splits) {
    if (s < 1) throw std::invalid_argument("partition: split counts must be >= 1");
  }
  Partition part;
  part.splits = splits;
  Aabb bounds = scene.bounds();
  if (bounds.empty()) bounds = Aabb{scene.camera().position, scene.camera().position};
  const double diag = bounds.diagonal();
  const double scale = diag > 0.0 ? diag : 1.0;
  part.box = bounds.padded(1e-6 * scale);

  for (int a = 0; a < 3; ++a) {
    auto& pl = part.planes[a];
    pl.resize(static_cast<std::size_t>(splits[a]) + 1);
    const double lo = part.box.lo[a], hi = part.box.hi[a];
    for (int i = 0; i <= splits[a]; ++i) {
      pl[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / splits[a];
    }
    pl.front() = lo;
    pl.back() = hi;
  }

  const std::size_t count = static_cast<std::size_t>(splits[0]) * splits[1] * splits[2];
  part.domains.resize(count);
  for (int k = 0; k < splits[2]; ++k) {
    for (int j = 0; j < splits[1]; ++j) {
      for (int i = 0; i < splits[0]; ++i) {
        SubDomain& d = part.domains[part.id_of(i, j, k)];
        d.id = part.id_of(i, j, k);
        d.cell = {i, j, k};
        const std::array<int, 3> c{i, j, k};
        for (int a = 0; a < 3; ++a) {
          d.box.lo[a] = part.planes[a][static_cast<std::size_t>(c[a])];
          d.box.hi[a] = part.planes[a][static_cast<std::size_t>(c[a]) + 1];
          for (int side = 0; side < 2; ++side) {
            std::array<int, 3> n = c;
            n[a] += side ? 1 : -1;
            if (n[a] >= 0 && n[a] < splits[a]) {
              d.neighbors[face_index(a, side == 1)] =
                  static_cast<std::int32_t>(part.id_of(n[0], n[1], n[2]));
            }
          }
        }
      }
    }
  }

  // Padding keeps triangles that rounding could place on either side of a
  // split plane in both cells.
  const double pad = 1e-7 * scale;
  for (const Triangle& t : scene.triangles_by_id()) {
    const Aabb tb = t.bounds();
    for (auto& d : part.domains) {
      if (d.box.overlaps(tb, pad)) d.triangles.push_back(t.id);
    }
  }
  for (auto& d : part.domains) d.footprint_bytes = estimate_bvh_footprint(d.triangles.size());
  return part;
}

LoadedSubDomain load_subdomain(const Scene& scene, const SubDomain& domain) {
  std::vector<Triangle> tris;
  tris.reserve(domain.triangles.size());
  for (auto id : domain.triangles) tris.push_back(scene.triangles_by_id()[id]);
  return LoadedSubDomain{&domain, Bvh(std::move(tris))};
}

Ray BoundaryRayRecord::ray() const {
  Ray r;
  r.origin = origin;
  r.direction = direction;
  r.throughput = throughput;
  r.pixel = pixel;
  r.path_key = path_key;
  r.depth = depth;
  r.t_min = t_min;
  r.t_max = t_max;
  r.tag = tag;
  return r;
}

BoundaryRayRecord BoundaryRayRecord::from_ray(const Ray& r, std::int32_t destination) {
  BoundaryRayRecord rec;
  rec.origin = r.origin;
  rec.direction = r.direction;
  rec.t_entry = r.t_min;
  rec.t_min = r.t_min;
  rec.t_max = r.t_max;
  rec.throughput = r.throughput;
  rec.pixel = r.pixel;
  rec.path_key = r.path_key;
  rec.depth = r.depth;
  rec.tag = r.tag;
  rec.destination = destination;
  return rec;
}

namespace {

struct Exit {
  double t = 0;
  std::int32_t neighbor = kExterior;
};

Exit box_exit(const SubDomain& d, const RayQuery& q, double t_lo) {
  const SlabSpan span = slab_span(d.box, q.origin, q.inv_direction);
  Exit e;
  e.t = std::max(span.t_exit, t_lo);
  const int axis = span.exit_axis;
  e.neighbor = d.neighbors[face_index(axis, q.direction[axis] > 0.0)];
  return e;
}

ProbeResult probe_step(const Partition& part, const LoadedSubDomain& sd,
                       const ShadowProbeRecord& p, bool approximate) {
  (void)part;
  if (!(p.t_max >= p.t_min)) return {ProbeResult::Kind::visible, std::nullopt};
  const RayQuery q = RayQuery::make(p.origin, p.direction);
  if (sd.bvh.any_hit(q, p.t_min, p.t_max)) return {ProbeResult::Kind::occluded, std::nullopt};
  if (approximate) return {ProbeResult::Kind::visible, std::nullopt};
  const Exit e = box_exit(*sd.domain, q, std::max(p.t_entry, p.t_min));
  if (e.t >= p.t_max || e.neighbor == kExterior) return {ProbeResult::Kind::visible, std::nullopt};
  ShadowProbeRecord next = p;
  next.t_entry = e.t;
  next.destination = e.neighbor;
  next.crossings = p.crossings + 1;
  return {ProbeResult::Kind::forwarded, std::move(next)};
}

}  // namespace

ProbeResult resolve_probe(const Partition& part, const LoadedSubDomain& sd,
                          const ShadowProbeRecord& probe) {
  return probe_step(part, sd, probe, false);
}

TraceOutcome trace_in_subdomain(const Scene& scene, const Partition& part,
                                const LoadedSubDomain& sd, const BoundaryRayRecord& record,
                                const RenderSettings& settings, ShadowMode mode) {
  const SubDomain& d = *sd.domain;
  const double tol = 1e-6 * std::max(part.box.diagonal(), 1e-300);
  if (!d.box.contains(record.entry(), tol)) {
    throw std::logic_error("ray record entry point lies outside sub-domain " + std::to_string(d.id));
  }
  TraceOutcome out;
  const RayQuery q = RayQuery::make(record.origin, record.direction);
  const double t_lo = std::max(record.t_entry, record.t_min);
  const Exit e = box_exit(d, q, t_lo);
  const double t_hi = std::min(e.t, record.t_max);

  if (auto th = sd.bvh.intersect(q, t_lo, t_hi)) {
    const Hit hit = make_hit(sd.bvh.triangles()[th->index], q, *th);
    out.hit = hit;
    const Ray ray = record.ray();
    HitExpansion ex = expand_hit(scene, ray, hit, settings);
    const std::uint64_t base = ray.path_key & ~kRayKeySuffix;
    for (LightSample& ls : ex.lights) {
      ShadowProbeRecord p;
      p.origin = ls.shadow.origin;
      p.direction = ls.shadow.direction;
      p.t_entry = ls.shadow.t_min;
      p.t_min = ls.shadow.t_min;
      p.t_max = ls.shadow.t_max;
      p.pixel = ray.pixel;
      p.path_key = base | ls.light;
      p.destination = static_cast<std::int32_t>(d.id);
      const ProbeResult r = probe_step(part, sd, p, mode.approximate);
      if (r.kind == ProbeResult::Kind::visible) {
        out.contributions.push_back({p.pixel, p.path_key, std::move(ls.contribution)});
      } else if (r.kind == ProbeResult::Kind::forwarded) {
        out.probes.push_back(*r.next);
        out.probes.back().contribution = std::move(ls.contribution);
      }
    }
    for (const Ray& child : ex.children) {
      // The child starts at t_min, which may already be past this box.
      BoundaryRayRecord rec = BoundaryRayRecord::from_ray(child, static_cast<std::int32_t>(d.id));
      if (d.box.contains(rec.entry(), 0.0)) {
        out.local.push_back(std::move(rec));
        continue;
      }
      const SlabSpan span = slab_span(part.box, child.origin, reciprocal(child.direction));
      const double t0 = std::max(span.t_enter, child.t_min);
      if (!span.hit || span.t_exit < t0 || t0 > child.t_max) continue;  // leaves the scene
      rec.t_entry = t0;
      rec.destination = static_cast<std::int32_t>(part.locate(rec.entry()));
      out.local.push_back(std::move(rec));
    }
    out.kind = out.local.empty() ? TraceOutcome::Kind::shaded : TraceOutcome::Kind::spawn_set;
    return out;
  }

  if (e.t >= record.t_max) {
    out.kind = TraceOutcome::Kind::missed;
    return out;
  }
  if (e.neighbor == kExterior) {
    out.kind = TraceOutcome::Kind::escaped;
    return out;
  }
  BoundaryRayRecord next = record;
  next.t_entry = e.t;
  next.destination = e.neighbor;
  next.crossings = record.crossings + 1;
  out.crossing = std::move(next);
  out.kind = TraceOutcome::Kind::crossing;
  return out;
}

}  // namespace prism::ddm
