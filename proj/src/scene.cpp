// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/scene.hpp"

#include <algorithm>
#include <cmath>
#include <spdlog/spdlog.h>

namespace prism {

std::optional<Triangle> make_triangle(const Vec3& a, const Vec3& b, const Vec3& c,
                                      std::uint32_t material, std::uint32_t id) {
  const Vec3 n = cross(b - a, c - a);
  const double len = length(n);
  if (!(len > 0.0) || !std::isfinite(len)) return std::nullopt;
  Triangle t;
  t.p = {a, b, c};
  t.ng = n / len;
  t.n = {t.ng, t.ng, t.ng};
  t.material = material;
  t.id = id;
  return t;
}

Camera Camera::look_at(const Vec3& position, const Vec3& target, const Vec3& up_hint, int width,
                       int height, double fov) {
  Camera cam;
  cam.position = position;
  cam.forward = normalize(target - position);
  cam.right = normalize(cross(cam.forward, up_hint));
  cam.up = cross(cam.right, cam.forward);
  cam.width = width;
  cam.height = height;
  cam.fov = fov;
  return cam;
}

// ---------------------------------------------------------------------------
// Watertight ray/triangle intersection (Woop, Benthin, Wald 2013).

RayQuery RayQuery::make(const Vec3& origin, const Vec3& direction) {
  RayQuery q;
  q.origin = origin;
  q.direction = direction;
  q.inv_direction = reciprocal(direction);
  const Vec3 a{std::abs(direction.x), std::abs(direction.y), std::abs(direction.z)};
  q.kz = a.x > a.y ? (a.x > a.z ? 0 : 2) : (a.y > a.z ? 1 : 2);
  q.kx = (q.kz + 1) % 3;
  q.ky = (q.kx + 1) % 3;
  if (direction[q.kz] < 0.0) std::swap(q.kx, q.ky);
  q.sx = direction[q.kx] / direction[q.kz];
  q.sy = direction[q.ky] / direction[q.kz];
  q.sz = 1.0 / direction[q.kz];
  return q;
}

std::optional<TriangleHit> intersect_triangle(const RayQuery& q, const Triangle& tri,
                                              double t_min, double t_max) {
  const Vec3 a = tri.p[0] - q.origin;
  const Vec3 b = tri.p[1] - q.origin;
  const Vec3 c = tri.p[2] - q.origin;
  const double ax = a[q.kx] - q.sx * a[q.kz];
  const double ay = a[q.ky] - q.sy * a[q.kz];
  const double bx = b[q.kx] - q.sx * b[q.kz];
  const double by = b[q.ky] - q.sy * b[q.kz];
  const double cx = c[q.kx] - q.sx * c[q.kz];
  const double cy = c[q.ky] - q.sy * c[q.kz];

  const double u = cx * by - cy * bx;
  const double v = ax * cy - ay * cx;
  const double w = bx * ay - by * ax;
  if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return std::nullopt;
  const double det = u + v + w;
  if (det == 0.0) return std::nullopt;

  const double az = q.sz * a[q.kz];
  const double bz = q.sz * b[q.kz];
  const double cz = q.sz * c[q.kz];
  const double t = (u * az + v * bz + w * cz) / det;
  if (!(t >= t_min && t <= t_max)) return std::nullopt;
  return TriangleHit{t, v / det, w / det, 0};
}

Hit make_hit(const Triangle& tri, const RayQuery& q, const TriangleHit& th) {
  Hit h;
  h.t = th.t;
  h.position = q.origin + q.direction * th.t;
  h.geometric_normal = tri.ng;
  Vec3 shading = tri.ng;
  if (tri.smooth) {
    shading = normalize(tri.n[0] * (1.0 - th.b1 - th.b2) + tri.n[1] * th.b1 + tri.n[2] * th.b2);
  }
  h.front_face = dot(q.direction, tri.ng) < 0.0;
  h.normal = dot(q.direction, shading) < 0.0 ? shading : -shading;
  h.material = tri.material;
  h.triangle = tri.id;
  return h;
}

// ---------------------------------------------------------------------------
// BVH

namespace {

// Node boxes are widened so the slab test never rejects a triangle hit that
// rounding places on the box surface.
Aabb conservative(const Aabb& b) {
  const Vec3 mag = max(Vec3{std::abs(b.lo.x), std::abs(b.lo.y), std::abs(b.lo.z)},
                       Vec3{std::abs(b.hi.x), std::abs(b.hi.y), std::abs(b.hi.z)});
  const double scale = std::max({mag.x, mag.y, mag.z, b.diagonal()});
  return b.padded(scale * 1e-9 + 1e-300);
}

bool box_overlaps_range(const Aabb& box, const RayQuery& q, double t_min, double t_max) {
  const SlabSpan s = slab_span(box, q.origin, q.inv_direction);
  return s.hit && s.t_enter <= t_max && s.t_exit >= t_min;
}

}  // namespace

Bvh::Bvh(std::vector<Triangle> triangles, std::size_t leaf_size)
    : triangles_(std::move(triangles)) {
  if (triangles_.empty()) return;
  nodes_.reserve(2 * triangles_.size());
  build(0, static_cast<std::uint32_t>(triangles_.size()), std::max<std::size_t>(1, leaf_size));
}

std::uint32_t Bvh::build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb bounds, centroids;
  for (std::uint32_t i = begin; i < end; ++i) {
    bounds.expand(triangles_[i].bounds());
    centroids.expand(triangles_[i].centroid());
  }
  nodes_[index].bounds = conservative(bounds);

  const std::uint32_t count = end - begin;
  if (count <= leaf_size) {
    nodes_[index].first = begin;
    nodes_[index].count = count;
    return index;
  }
  const int axis = centroids.longest_axis();
  const std::uint32_t mid = begin + count / 2;
  std::nth_element(triangles_.begin() + begin, triangles_.begin() + mid, triangles_.begin() + end,
                   [axis](const Triangle& a, const Triangle& b) {
                     const double ca = a.centroid()[axis], cb = b.centroid()[axis];
                     return ca < cb || (ca == cb && a.id < b.id);
                   });
  nodes_[index].axis = static_cast<std::uint8_t>(axis);
  build(begin, mid, leaf_size);
  const std::uint32_t right = build(mid, end, leaf_size);
  nodes_[index].first = right;
  nodes_[index].count = 0;
  return index;
}

std::optional<TriangleHit> Bvh::intersect(const RayQuery& q, double t_min, double t_max) const {
  if (nodes_.empty()) return std::nullopt;
  std::optional<TriangleHit> best;
  double best_t = t_max;
  std::uint32_t best_id = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!box_overlaps_range(node.bounds, q, t_min, best_t)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        auto th = intersect_triangle(q, triangles_[i], t_min, best_t);
        if (th && nearer(th->t, triangles_[i].id, best_t, best_id)) {
          best_t = th->t;
          best_id = triangles_[i].id;
          th->index = i;
          best = th;
        }
      }
      continue;
    }
    const std::uint32_t left = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
    const std::uint32_t right = node.first;
    // Visit the child on the near side of the split first.
    if (q.direction[node.axis] < 0.0) {
      stack[top++] = left;
      stack[top++] = right;
    } else {
      stack[top++] = right;
      stack[top++] = left;
    }
  }
  return best;
}

bool Bvh::any_hit(const RayQuery& q, double t_min, double t_max) const {
  if (nodes_.empty()) return false;
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!box_overlaps_range(node.bounds, q, t_min, t_max)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        if (intersect_triangle(q, triangles_[i], t_min, t_max)) return true;
      }
      continue;
    }
    stack[top++] = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
    stack[top++] = node.first;
  }
  return false;
}

std::size_t Bvh::footprint_bytes() const {
  return sizeof(Bvh) + triangles_.capacity() * sizeof(Triangle) + nodes_.capacity() * sizeof(Node);
}

std::size_t estimate_bvh_footprint(std::size_t triangle_count) {
  return sizeof(Bvh) + triangle_count * sizeof(Triangle) + 2 * triangle_count * sizeof(Bvh::Node);
}

// ---------------------------------------------------------------------------
// Scene

Scene::Scene(const WavelengthGrid& grid) : grid_(grid) {}

std::uint32_t Scene::add_material(std::string name, Material material) {
  materials_.push_back(std::move(material));
  material_names_.push_back(std::move(name));
  return static_cast<std::uint32_t>(materials_.size() - 1);
}

void Scene::add_mesh(Mesh mesh) { meshes_.push_back(std::move(mesh)); }

void Scene::add_light(Light light) { lights_.push_back(std::move(light)); }

std::optional<std::uint32_t> Scene::material_id(const std::string& name) const {
  for (std::size_t i = 0; i < material_names_.size(); ++i) {
    if (material_names_[i] == name) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

void Scene::finalize() {
  by_id_.clear();
  dropped_degenerate_ = 0;
  for (const Mesh& mesh : meshes_) {
    const bool smooth = !mesh.normals.empty();
    for (const auto& idx : mesh.indices) {
      auto tri = make_triangle(mesh.positions[idx[0]], mesh.positions[idx[1]],
                               mesh.positions[idx[2]], mesh.material,
                               static_cast<std::uint32_t>(by_id_.size()));
      if (!tri) {
        ++dropped_degenerate_;
        continue;
      }
      if (smooth) {
        tri->smooth = true;
        tri->n = {mesh.normals[idx[0]], mesh.normals[idx[1]], mesh.normals[idx[2]]};
      }
      by_id_.push_back(*tri);
    }
  }
  if (dropped_degenerate_ > 0) {
    spdlog::warn("scene: dropped {} degenerate triangle(s)", dropped_degenerate_);
  }
  bounds_ = Aabb{};
  for (const auto& t : by_id_) bounds_.expand(t.bounds());
  bvh_ = Bvh(by_id_);
  const double diag = bounds_.diagonal();
  shadow_epsilon_ = render_.shadow_epsilon_relative * (diag > 0.0 ? diag : 1.0);
}

std::optional<Hit> intersect(const Scene& scene, const Ray& ray) {
  const RayQuery q = RayQuery::make(ray.origin, ray.direction);
  auto th = scene.bvh().intersect(q, ray.t_min, ray.t_max);
  if (!th) return std::nullopt;
  return make_hit(scene.bvh().triangles()[th->index], q, *th);
}

ShadowQuery shadow_query(const Vec3& from, const Light& light, double epsilon) {
  ShadowQuery s;
  s.origin = from;
  s.t_min = epsilon;
  if (const auto* p = std::get_if<PointLight>(&light.kind)) {
    const Vec3 d = p->position - from;
    const double dist = length(d);
    s.direction = d / dist;
    s.t_max = dist - epsilon;
  } else {
    s.direction = -std::get<DirectionalLight>(light.kind).direction;
    s.t_max = std::numeric_limits<double>::infinity();
  }
  return s;
}

bool occluded(const Scene& scene, const ShadowQuery& query) {
  if (!(query.t_max >= query.t_min)) return false;
  return scene.bvh().any_hit(RayQuery::make(query.origin, query.direction), query.t_min,
                             query.t_max);
}

bool occluded(const Scene& scene, const Vec3& from, const Light& light) {
  return occluded(scene, shadow_query(from, light, scene.shadow_epsilon()));
}

Ray generate_primary_ray(const Camera& cam, const WavelengthGrid& grid, int px, int py) {
  if (px < 0 || py < 0 || px >= cam.width || py >= cam.height) {
    throw std::out_of_range("pixel (" + std::to_string(px) + ", " + std::to_string(py) +
                            ") outside " + std::to_string(cam.width) + "x" +
                            std::to_string(cam.height) + " image");
  }
  const double half_h = std::tan(0.5 * cam.fov);
  const double half_w = half_h * static_cast<double>(cam.width) / static_cast<double>(cam.height);
  const double sx = (2.0 * (px + 0.5) / cam.width - 1.0) * half_w;
  const double sy = (1.0 - 2.0 * (py + 0.5) / cam.height) * half_h;
  Ray r;
  r.origin = cam.position;
  r.direction = normalize(cam.forward + cam.right * sx + cam.up * sy);
  r.throughput = Spectrum(grid, 1.0);
  r.pixel = static_cast<std::uint32_t>(py) * static_cast<std::uint32_t>(cam.width) +
            static_cast<std::uint32_t>(px);
  r.path_key = kRayKeySuffix;
  r.depth = 0;
  r.t_min = 0.0;
  r.tag = PathTag::camera;
  return r;
}

}  // namespace prism
