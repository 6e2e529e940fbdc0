// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "prism/geometry.hpp"
#include "prism/optics.hpp"
#include "prism/settings.hpp"
#include "prism/spectral.hpp"

namespace prism {

struct Triangle {
  std::array<Vec3, 3> p;
  /// Per-vertex shading normals; all equal to `ng` for flat meshes.
  std::array<Vec3, 3> n;
  /// Unit geometric normal following the (p1 - p0) x (p2 - p0) winding.
  Vec3 ng;
  std::uint32_t material = 0;
  std::uint32_t id = 0;
  bool smooth = false;

  Aabb bounds() const {
    Aabb b;
    for (const auto& v : p) b.expand(v);
    return b;
  }
  Vec3 centroid() const { return (p[0] + p[1] + p[2]) / 3.0; }
};

/// Builds a Triangle; returns nullopt for zero-area input.
std::optional<Triangle> make_triangle(const Vec3& a, const Vec3& b, const Vec3& c,
                                      std::uint32_t material, std::uint32_t id);

struct Mesh {
  std::string name;
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;  // empty or one per position
  std::vector<std::array<std::uint32_t, 3>> indices;
  std::uint32_t material = 0;
};

struct PointLight {
  Vec3 position;
};

struct DirectionalLight {
  /// Direction the light travels (unit).
  Vec3 direction;
};

struct Light {
  std::variant<PointLight, DirectionalLight> kind;
  /// Point: intensity W sr^-1 nm^-1. Directional: irradiance W m^-2 nm^-1.
  Spectrum emission;
};

/// Pinhole camera. `fov` is the vertical field of view in radians.
struct Camera {
  Vec3 position;
  Vec3 forward{0, 0, -1};
  Vec3 right{1, 0, 0};
  Vec3 up{0, 1, 0};
  int width = 1;
  int height = 1;
  double fov = 1.0;

  static Camera look_at(const Vec3& position, const Vec3& target, const Vec3& up_hint, int width,
                        int height, double fov);
  std::uint32_t pixel_count() const {
    return static_cast<std::uint32_t>(width) * static_cast<std::uint32_t>(height);
  }
};

enum class PathTag : std::uint8_t { camera = 0, reflected = 1, refracted = 2, shadow = 3 };

struct Ray {
  Vec3 origin;
  Vec3 direction;
  Spectrum throughput;
  std::uint32_t pixel = 0;
  std::uint64_t path_key = 0;
  int depth = 0;
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
  PathTag tag = PathTag::camera;
};

/// Precomputed shear constants for the watertight ray/triangle test.
struct RayQuery {
  Vec3 origin;
  Vec3 direction;
  Vec3 inv_direction;
  int kx = 0, ky = 1, kz = 2;
  double sx = 0, sy = 0, sz = 0;

  static RayQuery make(const Vec3& origin, const Vec3& direction);
};

struct TriangleHit {
  double t = 0;
  double b1 = 0, b2 = 0;     // barycentric weights of p1, p2
  std::uint32_t index = 0;   // position in the owning triangle array
};

/// Watertight triangle test; hits with t in [t_min, t_max] only. Two-sided.
std::optional<TriangleHit> intersect_triangle(const RayQuery& q, const Triangle& tri,
                                              double t_min, double t_max);

/// True when (t, id) is nearer than (best_t, best_id); ties go to the lower id.
constexpr bool nearer(double t, std::uint32_t id, double best_t, std::uint32_t best_id) {
  return t < best_t || (t == best_t && id < best_id);
}

/// Binary BVH, median split on the longest centroid axis.
class Bvh {
 public:
  struct Node {
    Aabb bounds;
    std::uint32_t first = 0;  // first triangle (leaf) or right child (interior)
    std::uint32_t count = 0;  // 0 for interior nodes
    std::uint8_t axis = 0;
  };

  Bvh() = default;
  explicit Bvh(std::vector<Triangle> triangles, std::size_t leaf_size = 4);

  std::optional<TriangleHit> intersect(const RayQuery& q, double t_min, double t_max) const;
  bool any_hit(const RayQuery& q, double t_min, double t_max) const;

  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  Aabb bounds() const { return nodes_.empty() ? Aabb{} : nodes_.front().bounds; }
  std::size_t footprint_bytes() const;

 private:
  std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size);

  std::vector<Triangle> triangles_;
  std::vector<Node> nodes_;
};

/// Byte estimate for a BVH over `triangle_count` triangles (used before loading).
std::size_t estimate_bvh_footprint(std::size_t triangle_count);

struct Hit {
  double t = 0;
  Vec3 position;
  /// Shading normal oriented against the incoming ray.
  Vec3 normal;
  /// Geometric normal as authored (outward for closed meshes).
  Vec3 geometric_normal;
  bool front_face = true;
  std::uint32_t material = 0;
  std::uint32_t triangle = 0;
};

Hit make_hit(const Triangle& tri, const RayQuery& q, const TriangleHit& th);

/// Segment used for shadow tests: origin + t * direction, t in [t_min, t_max].
struct ShadowQuery {
  Vec3 origin;
  Vec3 direction;
  double t_min = 0;
  double t_max = std::numeric_limits<double>::infinity();
};

/// Shadow segment from `from` toward `light`; for point lights the far end
/// stops `epsilon` short of the light.
ShadowQuery shadow_query(const Vec3& from, const Light& light, double epsilon);

class Scene {
 public:
  explicit Scene(const WavelengthGrid& grid = WavelengthGrid{});

  std::uint32_t add_material(std::string name, Material material);
  void add_mesh(Mesh mesh);
  void add_light(Light light);
  void set_camera(const Camera& camera) { camera_ = camera; }
  RenderSettings& render_settings() { return render_; }
  GiSettings& gi_settings() { return gi_; }

  /// Flattens meshes into triangles (dropping degenerate ones), builds the
  /// BVH and derives bounds and the shadow epsilon. Call once after editing.
  void finalize();

  const WavelengthGrid& grid() const { return grid_; }
  const Camera& camera() const { return camera_; }
  const RenderSettings& render_settings() const { return render_; }
  const GiSettings& gi_settings() const { return gi_; }
  const std::vector<Material>& materials() const { return materials_; }
  const std::vector<std::string>& material_names() const { return material_names_; }
  std::optional<std::uint32_t> material_id(const std::string& name) const;
  const std::vector<Light>& lights() const { return lights_; }
  const std::vector<Mesh>& meshes() const { return meshes_; }
  const std::vector<Triangle>& triangles() const { return bvh_.triangles(); }
  const Bvh& bvh() const { return bvh_; }
  const Aabb& bounds() const { return bounds_; }
  double shadow_epsilon() const { return shadow_epsilon_; }
  std::size_t dropped_degenerate() const { return dropped_degenerate_; }

  /// Triangles in id order (the BVH reorders its copy).
  const std::vector<Triangle>& triangles_by_id() const { return by_id_; }

 private:
  WavelengthGrid grid_;
  Camera camera_;
  RenderSettings render_;
  GiSettings gi_;
  std::vector<Material> materials_;
  std::vector<std::string> material_names_;
  std::vector<Light> lights_;
  std::vector<Mesh> meshes_;
  std::vector<Triangle> by_id_;
  Bvh bvh_;
  Aabb bounds_;
  double shadow_epsilon_ = 1e-4;
  std::size_t dropped_degenerate_ = 0;
};

/// Nearest hit with t in [ray.t_min, ray.t_max].
std::optional<Hit> intersect(const Scene& scene, const Ray& ray);

/// True iff some triangle lies on the shadow segment.
bool occluded(const Scene& scene, const ShadowQuery& query);
bool occluded(const Scene& scene, const Vec3& from, const Light& light);

/// Ray through the centre of pixel (px, py); row 0 is the top of the image.
Ray generate_primary_ray(const Camera& cam, const WavelengthGrid& grid, int px, int py);

// ---------------------------------------------------------------------------
// Scene files

/// Malformed scene text; what() carries "path:line:column: message".
class SceneParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed file describing an invalid scene; lists every violation.
class SceneValidationError : public std::runtime_error {
 public:
  explicit SceneValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct SceneLoadOptions {
  /// Directory holding cie1931_{x,y,z}bar.txt, needed for *_rgb keys.
  std::filesystem::path data_dir;
  ClipCounter* clip_counter = nullptr;
};

Scene load_scene(const std::filesystem::path& path, const SceneLoadOptions& options = {});

/// Canonical little-endian dump of a finalized scene, for determinism checks.
std::vector<std::uint8_t> serialize(const Scene& scene);

}  // namespace prism
