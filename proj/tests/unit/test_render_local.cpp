// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "prism/render_local.hpp"
#include "support.hpp"

using namespace prism;

namespace {

const WavelengthGrid kGrid{};
constexpr double kPi = std::numbers::pi;

// Large Lambertian floor (y = 0) seen from above.
Scene floor_scene(double rho, std::vector<Light> lights, int size = 5) {
  Scene s(kGrid);
  const auto mat = s.add_material("floor", Lambertian{Spectrum(kGrid, rho)});
  s.add_mesh(test::quad_mesh({-50, 0, -50}, {-50, 0, 50}, {50, 0, 50}, {50, 0, -50}, mat));
  for (auto& l : lights) s.add_light(std::move(l));
  s.set_camera(Camera::look_at({0, 3, 0.001}, {0, 0, 0}, {0, 0, -1}, size, size, 0.6));
  s.finalize();
  return s;
}

// Glass-and-walls box used for determinism and linearity checks.
Scene mixed_scene(double light_scale) {
  Scene s(kGrid);
  const auto white = s.add_material("white", Lambertian{Spectrum(kGrid, 0.7)});
  const auto red = s.add_material("red", Lambertian{Spectrum(kGrid, 0.3)});
  const auto glass = s.add_material(
      "glass", FresnelDielectric{ComplexIor::constant(kGrid, 1.5), ComplexIor::constant(kGrid, 1.0)});
  s.add_mesh(test::quad_mesh({-2, 0, -2}, {-2, 0, 2}, {2, 0, 2}, {2, 0, -2}, white));
  s.add_mesh(test::quad_mesh({-2, 0, -2}, {2, 0, -2}, {2, 3, -2}, {-2, 3, -2}, red));
  s.add_mesh(test::box_mesh({-0.6, 0.2, -0.8}, {0.4, 1.2, 0.2}, glass));
  s.add_light({PointLight{{1.0, 2.5, 1.0}}, Spectrum(kGrid, 3.0 * light_scale)});
  s.add_light({DirectionalLight{normalize(Vec3{-0.3, -1, -0.2})}, Spectrum(kGrid, 0.5 * light_scale)});
  s.set_camera(Camera::look_at({0, 1.5, 5}, {0, 0.8, 0}, {0, 1, 0}, 24, 20, 0.9));
  s.render_settings().max_bounces = 6;
  s.finalize();
  return s;
}

}  // namespace

TEST_SUITE("render_local") {

TEST_CASE("shade_direct closed forms") {
  SUBCASE("normal directional light on rho = 0.6") {
    const Scene s = floor_scene(0.6, {{DirectionalLight{{0, -1, 0}}, Spectrum(kGrid, 1.0)}});
    const SpectralImage img = render(s);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      for (double v : img.pixel(i)) CHECK(std::abs(v - 0.6 / kPi) <= 1e-9);
    }
  }
  SUBCASE("light below the horizon contributes nothing") {
    const Scene s = floor_scene(0.6, {{DirectionalLight{normalize(Vec3{0.3, 1, 0})}, Spectrum(kGrid, 1.0)}});
    const SpectralImage img = render(s);
    CHECK(std::all_of(img.data().begin(), img.data().end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("two symmetric lights give exactly twice one") {
    const Vec3 a = normalize(Vec3{1, -1, 0}), b = normalize(Vec3{-1, -1, 0});
    const Scene one = floor_scene(0.6, {{DirectionalLight{a}, Spectrum(kGrid, 1.0)}});
    const Scene two = floor_scene(0.6, {{DirectionalLight{a}, Spectrum(kGrid, 1.0)},
                                         {DirectionalLight{b}, Spectrum(kGrid, 1.0)}});
    const SpectralImage i1 = render(one), i2 = render(two);
    for (std::size_t k = 0; k < i1.data().size(); ++k) CHECK(i2.data()[k] == 2.0 * i1.data()[k]);
  }
  SUBCASE("point light falloff") {
    const Scene s = floor_scene(0.5, {{PointLight{{0, 2, 0}}, Spectrum(kGrid, 8.0)}});
    Ray r;
    r.origin = {0, 3, 0};
    r.direction = {0, -1, 0};
    r.throughput = Spectrum(kGrid, 1.0);
    const auto h = intersect(s, r);
    REQUIRE(h);
    const Spectrum l = shade_direct(s, *h, {0, 1, 0});
    CHECK(l[0] == doctest::Approx(0.5 / kPi * 8.0 / 4.0).epsilon(1e-12));
  }
}

TEST_CASE("trace") {
  SUBCASE("no geometry gives zero") {
    Scene s(kGrid);
    s.add_light({PointLight{{0, 1, 0}}, Spectrum(kGrid, 1.0)});
    s.finalize();
    const Ray r = generate_primary_ray(Camera::look_at({0, 0, 3}, {0, 0, 0}, {0, 1, 0}, 1, 1, 0.5), kGrid, 0, 0);
    CHECK(trace(s, r, s.render_settings()).is_zero());
  }
  SUBCASE("Lambertian with max_bounces = 0 equals shade_direct") {
    Scene s = mixed_scene(1.0);
    RenderSettings rs = s.render_settings();
    rs.max_bounces = 0;
    int checked = 0;
    for (int y = 0; y < s.camera().height; ++y) {
      for (int x = 0; x < s.camera().width; ++x) {
        const Ray r = generate_primary_ray(s.camera(), kGrid, x, y);
        const auto h = intersect(s, r);
        if (!h || !is_diffuse(s.materials()[h->material])) continue;
        CHECK(trace(s, r, rs) == shade_direct(s, *h, -r.direction));
        ++checked;
      }
    }
    CHECK(checked > 100);
  }
  SUBCASE("glass slab in front of a wall") {
    Scene s(kGrid);
    const double rho = 0.8, intensity = 5.0;
    const auto wall = s.add_material("wall", Lambertian{Spectrum(kGrid, rho)});
    const auto glass = s.add_material(
        "glass", FresnelDielectric{ComplexIor::constant(kGrid, 1.5), ComplexIor::constant(kGrid, 1.0)});
    s.add_mesh(test::quad_mesh({-5, -5, 0}, {5, -5, 0}, {5, 5, 0}, {-5, 5, 0}, wall));
    s.add_mesh(test::box_mesh({-3, -3, 1.0}, {3, 3, 1.1}, glass));
    const Vec3 light{0.3, 0.2, 0.5};
    s.add_light({PointLight{light}, Spectrum(kGrid, intensity)});
    s.set_camera(Camera::look_at({0, 0, 5}, {0, 0, 0}, {0, 1, 0}, 1, 1, 0.1));
    s.render_settings().max_bounces = 2;
    s.render_settings().throughput_threshold = 1e-6;
    s.finalize();

    const double r0 = (0.5 / 2.5) * (0.5 / 2.5);
    const double t = 1.0 - r0;
    const double d2 = dot(light, light);
    const double wall_direct = rho / kPi * intensity * (light.z / std::sqrt(d2)) / d2;
    const Spectrum got = trace(s, generate_primary_ray(s.camera(), kGrid, 0, 0), s.render_settings());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(t * t * wall_direct).epsilon(1e-6));
  }
}

TEST_CASE("render") {
  const Scene s = mixed_scene(1.0);
  SUBCASE("1x1 image is one trace") {
    Scene one = s;
    Camera cam = one.camera();
    cam.width = cam.height = 1;
    one.set_camera(cam);
    const SpectralImage img = render(one);
    CHECK(img.spectrum(0) == trace(one, generate_primary_ray(cam, kGrid, 0, 0), one.render_settings()));
  }
  SUBCASE("no lights renders black") {
    Scene dark(kGrid);
    const auto m = dark.add_material("m", Lambertian{Spectrum(kGrid, 0.9)});
    dark.add_mesh(test::box_mesh({-1, -1, -1}, {1, 1, 1}, m));
    dark.set_camera(Camera::look_at({0, 0, 5}, {0, 0, 0}, {0, 1, 0}, 8, 8, 0.7));
    dark.finalize();
    const SpectralImage img = render(dark);
    CHECK(std::all_of(img.data().begin(), img.data().end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("pixels are independent traces") {
    const Scene demo = load_scene(test::scenes_dir() / "cornell.scene", {test::data_dir(), nullptr});
    Scene small = demo;
    Camera cam = small.camera();
    cam.width = cam.height = 64;
    small.set_camera(cam);
    const SpectralImage img = render(small);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        const Spectrum t = trace(small, generate_primary_ray(cam, kGrid, x, y), small.render_settings());
        REQUIRE(img.spectrum(static_cast<std::size_t>(y * 64 + x)) == t);
      }
    }
  }
  SUBCASE("independent of the thread count") {
    RenderSettings a = s.render_settings(), b = a;
    a.threads = 1;
    b.threads = 5;
    CHECK(render(s, a) == render(s, b));
    CHECK(render(s, a) == render(s, a));
  }
  SUBCASE("linear in emission") {
    const SpectralImage one = render(s), two = render(mixed_scene(2.0));
    for (std::size_t k = 0; k < one.data().size(); ++k) CHECK(two.data()[k] == 2.0 * one.data()[k]);
  }
  SUBCASE("ray count bound per pixel") {
    const RenderSettings& rs = s.render_settings();
    for (int y = 0; y < s.camera().height; ++y) {
      for (int x = 0; x < s.camera().width; ++x) {
        Spectrum acc(kGrid);
        TraceCounters c;
        trace_into(s, generate_primary_ray(s.camera(), kGrid, x, y), rs, acc, nullptr, &c);
        CHECK(c.rays <= (1ull << (rs.max_bounces + 1)));
      }
    }
  }
  SUBCASE("raising the threshold never brightens a pixel") {
    RenderSettings lo = s.render_settings(), hi = lo;
    lo.throughput_threshold = 1e-6;
    hi.throughput_threshold = 0.2;
    const SpectralImage a = render(s, lo), b = render(s, hi);
    bool any_less = false;
    for (std::size_t k = 0; k < a.data().size(); ++k) {
      CHECK(b.data()[k] <= a.data()[k]);
      any_less = any_less || b.data()[k] < a.data()[k];
    }
    CHECK(any_less);
  }
  SUBCASE("all samples are non-negative") {
    const SpectralImage img = render(s);
    CHECK(std::all_of(img.data().begin(), img.data().end(), [](double v) { return v >= 0.0; }));
  }
}

}  // TEST_SUITE
