// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <optional>
#include <random>

#include "prism/scene.hpp"
#include "support.hpp"

using namespace prism;

namespace {

const WavelengthGrid kGrid{};

// Moller-Trumbore, written independently of the library's watertight test.
std::optional<double> mt_intersect(const Vec3& o, const Vec3& d, const Triangle& tri) {
  const Vec3 e1 = tri.p[1] - tri.p[0], e2 = tri.p[2] - tri.p[0];
  const Vec3 pv = cross(d, e2);
  const double det = dot(e1, pv);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tv = o - tri.p[0];
  const double u = dot(tv, pv) * inv;
  if (u < 0 || u > 1) return std::nullopt;
  const Vec3 qv = cross(tv, e1);
  const double v = dot(d, qv) * inv;
  if (v < 0 || u + v > 1) return std::nullopt;
  return dot(e2, qv) * inv;
}

struct Brute {
  double t;
  std::uint32_t id;
};

std::optional<Brute> brute_nearest(const Scene& s, const Vec3& o, const Vec3& d, double t_min, double t_max) {
  const RayQuery q = RayQuery::make(o, d);
  std::optional<Brute> best;
  for (const Triangle& tri : s.triangles_by_id()) {
    auto h = intersect_triangle(q, tri, t_min, t_max);
    if (h && (!best || nearer(h->t, tri.id, best->t, best->id))) best = Brute{h->t, tri.id};
  }
  return best;
}

Scene random_soup(std::mt19937_64& rng, int count) {
  Scene s(kGrid);
  const auto mat = s.add_material("grey", Lambertian{Spectrum(kGrid, 0.5)});
  std::uniform_real_distribution<double> u(-1.0, 1.0), small(-0.3, 0.3);
  Mesh m;
  m.material = mat;
  for (int i = 0; i < count; ++i) {
    const Vec3 c{u(rng), u(rng), u(rng)};
    for (int k = 0; k < 3; ++k) m.positions.push_back(c + Vec3{small(rng), small(rng), small(rng)});
    const auto b = static_cast<std::uint32_t>(3 * i);
    m.indices.push_back({b, b + 1, b + 2});
  }
  s.add_mesh(std::move(m));
  s.finalize();
  return s;
}

constexpr const char* kMinimal = R"([camera]
position = 0 0 3
look_at = 0 0 0
width = 4
height = 3

[material]
name = grey
type = lambertian
reflectance = 0.5

[light]
type = point
position = 0 2 2
emission = 10

[mesh]
name = tri
material = grey
v 0 0 0
v 1 0 0
v 0 1 0
f 0 1 2
)";

}  // namespace

TEST_SUITE("scene") {

TEST_CASE("intersect: perpendicular ray at a unit quad") {
  Scene s(kGrid);
  const auto mat = s.add_material("m", Lambertian{Spectrum(kGrid, 0.5)});
  s.add_mesh(test::quad_mesh({0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, mat));
  s.finalize();
  Ray r;
  r.origin = {0.5, 0.5, 1.0};
  r.direction = {0, 0, -1};
  const auto h = intersect(s, r);
  REQUIRE(h);
  CHECK(h->t == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(h->normal.z == doctest::Approx(1.0));  // faces the ray origin

  r.origin = {2.0, 2.0, 1.0};
  CHECK_FALSE(intersect(s, r));
}

TEST_CASE("BVH agrees with a brute-force scan") {
  std::mt19937_64 rng(42);
  const Scene s = random_soup(rng, 500);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 o{u(rng), u(rng), u(rng)};
    const Vec3 d = test::random_unit(rng);
    Ray r;
    r.origin = o;
    r.direction = d;
    const auto h = intersect(s, r);
    const auto b = brute_nearest(s, o, d, 0.0, std::numeric_limits<double>::infinity());
    REQUIRE(h.has_value() == b.has_value());
    if (!h) continue;
    ++hits;
    CHECK(h->triangle == b->id);
    CHECK(std::abs(h->t - b->t) <= 1e-9);
    const auto mt = mt_intersect(o, d, s.triangles_by_id()[b->id]);
    REQUIRE(mt);
    CHECK(std::abs(*mt - h->t) <= 1e-9);
  }
  CHECK(hits > 100);
}

TEST_CASE("occluded") {
  SUBCASE("empty scene") {
    Scene s(kGrid);
    s.finalize();
    const Light l{PointLight{{0, 5, 0}}, Spectrum(kGrid, 1.0)};
    CHECK_FALSE(occluded(s, {0, 0, 0}, l));
  }
  SUBCASE("plane between point and light") {
    Scene s(kGrid);
    const auto mat = s.add_material("m", Lambertian{Spectrum(kGrid, 0.5)});
    s.add_mesh(test::quad_mesh({-1, 1, -1}, {1, 1, -1}, {1, 1, 1}, {-1, 1, 1}, mat));
    s.finalize();
    CHECK(occluded(s, {0, 0, 0}, Light{PointLight{{0, 5, 0}}, Spectrum(kGrid, 1.0)}));
    CHECK(occluded(s, {0, 0, 0}, Light{DirectionalLight{{0, -1, 0}}, Spectrum(kGrid, 1.0)}));
    CHECK_FALSE(occluded(s, {0, 0, 0}, Light{PointLight{{0, 0.5, 0}}, Spectrum(kGrid, 1.0)}));
  }
  SUBCASE("random configurations against a brute-force segment test") {
    std::mt19937_64 rng(7);
    const Scene s = random_soup(rng, 200);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 200; ++i) {
      const Vec3 from{u(rng), u(rng), u(rng)};
      const Light l = i % 2 ? Light{PointLight{{u(rng), u(rng), u(rng)}}, Spectrum(kGrid, 1.0)}
                            : Light{DirectionalLight{test::random_unit(rng)}, Spectrum(kGrid, 1.0)};
      const ShadowQuery q = shadow_query(from, l, s.shadow_epsilon());
      bool brute = false;
      for (const Triangle& tri : s.triangles_by_id()) {
        auto t = mt_intersect(q.origin, q.direction, tri);
        if (t && *t >= q.t_min && *t <= q.t_max) brute = true;
      }
      CHECK(occluded(s, from, l) == brute);
    }
  }
}

TEST_CASE("primary rays") {
  const Camera cam = Camera::look_at({0, 0, 5}, {0, 0, 0}, {0, 1, 0}, 5, 3, 0.8);
  SUBCASE("centre pixel of an odd image looks along forward") {
    const Ray r = generate_primary_ray(cam, kGrid, 2, 1);
    CHECK(dot(r.direction, cam.forward) >= 1 - 1e-9);
    CHECK(r.throughput == Spectrum(kGrid, 1.0));
    CHECK(r.depth == 0);
    CHECK(r.pixel == 1 * 5 + 2);
  }
  SUBCASE("corners mirror about the forward axis") {
    const Ray a = generate_primary_ray(cam, kGrid, 0, 0);
    const Ray b = generate_primary_ray(cam, kGrid, 4, 0);
    const Ray c = generate_primary_ray(cam, kGrid, 0, 2);
    CHECK(std::abs(dot(a.direction, cam.right) + dot(b.direction, cam.right)) <= 1e-9);
    CHECK(std::abs(dot(a.direction, cam.up) - dot(b.direction, cam.up)) <= 1e-9);
    CHECK(std::abs(dot(a.direction, cam.up) + dot(c.direction, cam.up)) <= 1e-9);
    CHECK(std::abs(dot(a.direction, cam.forward) - dot(c.direction, cam.forward)) <= 1e-9);
  }
  SUBCASE("all directions are unit length") {
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        CHECK(std::abs(length(generate_primary_ray(cam, kGrid, x, y).direction) - 1.0) <= 1e-12);
      }
    }
  }
  SUBCASE("tiny field of view") {
    const Camera narrow = Camera::look_at({0, 0, 5}, {0, 0, 0}, {0, 1, 0}, 9, 9, 1e-4);
    for (int y = 0; y < 9; ++y) {
      for (int x = 0; x < 9; ++x) {
        const double c = std::clamp(dot(generate_primary_ray(narrow, kGrid, x, y).direction, narrow.forward), -1.0, 1.0);
        CHECK(std::acos(c) <= 1e-4);
      }
    }
  }
  SUBCASE("out of bounds pixel") {
    CHECK_THROWS_AS(generate_primary_ray(cam, kGrid, 5, 0), std::out_of_range);
    CHECK_THROWS_AS(generate_primary_ray(cam, kGrid, 0, -1), std::out_of_range);
  }
}

TEST_CASE("degenerate triangles are dropped") {
  Scene s(kGrid);
  const auto mat = s.add_material("m", Lambertian{Spectrum(kGrid, 0.5)});
  Mesh m;
  m.material = mat;
  m.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}};
  m.indices = {{0, 1, 2}, {0, 1, 3}};  // second is collinear
  s.add_mesh(m);
  s.finalize();
  CHECK(s.triangles().size() == 1);
  CHECK(s.dropped_degenerate() == 1);
}

TEST_CASE("load_scene: minimal file") {
  test::TempDir dir("scene");
  const Scene s = load_scene(dir.write("min.scene", kMinimal), {test::data_dir(), nullptr});
  CHECK(s.triangles().size() == 1);
  CHECK(s.lights().size() == 1);
  CHECK(s.camera().width == 4);
  CHECK(s.camera().height == 3);
  CHECK(s.materials().size() == 1);
  CHECK(s.shadow_epsilon() == doctest::Approx(1e-4 * std::sqrt(2.0)));
}

TEST_CASE("load_scene: errors") {
  test::TempDir dir("scene-err");
  SUBCASE("missing IOR table names the path") {
    const std::string text = std::string(kMinimal) +
                             "\n[material]\nname = glass\ntype = dielectric\nior_file = nowhere/bk7.txt\n";
    try {
      load_scene(dir.write("a.scene", text));
      FAIL("expected SceneValidationError");
    } catch (const SceneValidationError& e) {
      CHECK(std::string(e.what()).find("nowhere/bk7.txt") != std::string::npos);
    }
  }
  SUBCASE("parse error carries line and column") {
    try {
      load_scene(dir.write("b.scene", "[camera]\nposition = 0 0 3\nthis line is broken\n"));
      FAIL("expected SceneParseError");
    } catch (const SceneParseError& e) {
      CHECK(std::string(e.what()).find("b.scene:3:") != std::string::npos);
    }
  }
  SUBCASE("unknown section is a parse error") {
    CHECK_THROWS_AS(load_scene(dir.write("c.scene", "[lights]\n")), SceneParseError);
  }
  SUBCASE("validation lists every problem") {
    std::string text = kMinimal;
    text.replace(text.find("material = grey"), 15, "material = gold");
    text += "\n[light]\ntype = point\nemission = 1\n";  // no position
    try {
      load_scene(dir.write("d.scene", text), {test::data_dir(), nullptr});
      FAIL("expected SceneValidationError");
    } catch (const SceneValidationError& e) {
      CHECK(e.problems().size() >= 2);
      bool dangling = false, position = false;
      for (const auto& p : e.problems()) {
        dangling = dangling || p.find("gold") != std::string::npos;
        position = position || p.find("position") != std::string::npos;
      }
      CHECK(dangling);
      CHECK(position);
    }
  }
  SUBCASE("face index out of range") {
    std::string text = kMinimal;
    text.replace(text.find("f 0 1 2"), 7, "f 0 1 7");
    CHECK_THROWS_AS(load_scene(dir.write("e.scene", text)), SceneValidationError);
  }
}

TEST_CASE("load_scene: demo Cornell box") {
  const auto path = test::scenes_dir() / "cornell.scene";
  const Scene a = load_scene(path, {test::data_dir(), nullptr});
  CHECK(std::abs(a.bounds().lo.x) <= 1e-6);
  CHECK(std::abs(a.bounds().lo.y) <= 1e-6);
  CHECK(std::abs(a.bounds().lo.z) <= 1e-6);
  CHECK(std::abs(a.bounds().hi.x - 2.0) <= 1e-6);
  CHECK(std::abs(a.bounds().hi.y - 2.0) <= 1e-6);
  CHECK(std::abs(a.bounds().hi.z - 2.0) <= 1e-6);
  // The glass sphere comes from the sidecar mesh.
  CHECK(a.meshes().size() == 6);
  const Scene b = load_scene(path, {test::data_dir(), nullptr});
  CHECK(serialize(a) == serialize(b));
}

}  // TEST_SUITE
