// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/render_local.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <mutex>
#include <thread>

namespace prism {

namespace {
constexpr double kReferenceWavelengthNm = 589.0;
}

SpectralImage::SpectralImage(int width, int height, const WavelengthGrid& grid)
    : width_(width), height_(height), grid_(grid) {
  if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
  data_.assign(pixel_count() * grid.bin_count, 0.0);
}

std::span<double> SpectralImage::pixel(std::size_t index) {
  return {data_.data() + index * grid_.bin_count, grid_.bin_count};
}

std::span<const double> SpectralImage::pixel(std::size_t index) const {
  return {data_.data() + index * grid_.bin_count, grid_.bin_count};
}

Spectrum SpectralImage::spectrum(std::size_t index) const {
  auto p = pixel(index);
  return Spectrum(grid_, std::vector<double>(p.begin(), p.end()));
}

void SpectralImage::set(std::size_t index, const Spectrum& s) {
  if (!(s.grid() == grid_)) throw GridMismatch("image: spectrum grid differs from image grid");
  std::copy(s.samples().begin(), s.samples().end(), pixel(index).begin());
}

double max_abs_difference(const SpectralImage& a, const SpectralImage& b) {
  if (a.width() != b.width() || a.height() != b.height() || !(a.grid() == b.grid())) {
    throw std::invalid_argument("images differ in size or grid");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

LightGeometry light_geometry(const Vec3& position, const Light& light, double epsilon) {
  LightGeometry g;
  g.shadow = shadow_query(position, light, epsilon);
  g.to_light = g.shadow.direction;
  if (const auto* p = std::get_if<PointLight>(&light.kind)) {
    const Vec3 d = p->position - position;
    g.falloff = 1.0 / dot(d, d);
  }
  return g;
}

Spectrum shade_direct(const Scene& scene, const Hit& hit, const Vec3& wo) {
  Spectrum out(scene.grid());
  const Material& m = scene.materials()[hit.material];
  if (!is_diffuse(m)) return out;
  for (const Light& light : scene.lights()) {
    const LightGeometry g = light_geometry(hit.position, light, scene.shadow_epsilon());
    const double cos_s = dot(hit.normal, g.to_light);
    if (!(cos_s > 0.0)) continue;
    if (occluded(scene, g.shadow)) continue;
    out += eval_brdf(m, {g.to_light, wo, hit.normal}) * light.emission * (cos_s * g.falloff);
  }
  return out;
}

HitExpansion expand_hit(const Scene& scene, const Ray& ray, const Hit& hit,
                        const RenderSettings& settings) {
  HitExpansion out;
  const Material& m = scene.materials()[hit.material];
  const Vec3 wo = -ray.direction;

  if (is_diffuse(m)) {
    for (std::uint32_t i = 0; i < scene.lights().size(); ++i) {
      const Light& light = scene.lights()[i];
      const LightGeometry g = light_geometry(hit.position, light, scene.shadow_epsilon());
      const double cos_s = dot(hit.normal, g.to_light);
      if (!(cos_s > 0.0)) continue;
      Spectrum c = ray.throughput * eval_brdf(m, {g.to_light, wo, hit.normal}) * light.emission *
                   (cos_s * g.falloff);
      out.lights.push_back({i, std::move(c), g.shadow});
    }
    return out;
  }

  const int depth = ray.depth + 1;
  if (depth > settings.max_bounces) return out;
  const auto& glass = std::get<FresnelDielectric>(m);
  const ComplexIor& from = hit.front_face ? glass.exterior_ior : glass.ior;
  const ComplexIor& to = hit.front_face ? glass.ior : glass.exterior_ior;
  const double cos_i = std::clamp(dot(wo, hit.normal), 0.0, 1.0);
  const FresnelTerms f = fresnel(cos_i, from, to);

  auto spawn = [&](const Vec3& dir, const Spectrum& weight, unsigned branch, PathTag tag) {
    Spectrum tp = ray.throughput * weight;
    if (!(tp.max_value() >= settings.throughput_threshold)) return;
    Ray child;
    child.origin = hit.position;
    child.direction = dir;
    child.throughput = std::move(tp);
    child.pixel = ray.pixel;
    child.path_key = child_path_key(ray.path_key, depth, branch);
    child.depth = depth;
    child.t_min = scene.shadow_epsilon();
    child.tag = tag;
    out.children.push_back(std::move(child));
  };

  spawn(normalize(reflect(ray.direction, hit.normal)), f.reflectance, 1, PathTag::reflected);
  const double eta =
      from.real_at(kReferenceWavelengthNm) / to.real_at(kReferenceWavelengthNm);
  if (auto t = refract(ray.direction, hit.normal, eta)) {
    spawn(*t, f.transmittance, 2, PathTag::refracted);
  }
  return out;
}

void trace_into(const Scene& scene, const Ray& ray, const RenderSettings& settings,
                Spectrum& acc, const HitExtra* extra, TraceCounters* counters) {
  if (counters) ++counters->rays;
  const auto hit = intersect(scene, ray);
  if (!hit) return;
  HitExpansion ex = expand_hit(scene, ray, *hit, settings);
  for (const LightSample& ls : ex.lights) {
    if (counters) ++counters->shadow_rays;
    if (!occluded(scene, ls.shadow)) acc += ls.contribution;
  }
  if (extra && *extra) (*extra)(ray, *hit, acc);
  for (const Ray& child : ex.children) trace_into(scene, child, settings, acc, extra, counters);
}

Spectrum trace(const Scene& scene, const Ray& ray, const RenderSettings& settings) {
  Spectrum acc(scene.grid());
  trace_into(scene, ray, settings, acc);
  return acc;
}

void parallel_rows(int rows, unsigned threads, const std::function<void(int)>& fn) {
  unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(std::max(rows, 1)));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int r = next++; r < rows; r = next++) {
      try {
        fn(r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = rows;
      }
    }
  };
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

SpectralImage render(const Scene& scene, const RenderSettings& settings, const HitExtra* extra,
                     TraceCounters* counters) {
  const Camera& cam = scene.camera();
  SpectralImage img(cam.width, cam.height, scene.grid());
  std::vector<TraceCounters> per_row(static_cast<std::size_t>(cam.height));
  parallel_rows(cam.height, settings.threads, [&](int y) {
    for (int x = 0; x < cam.width; ++x) {
      const Ray ray = generate_primary_ray(cam, scene.grid(), x, y);
      Spectrum acc(scene.grid());
      trace_into(scene, ray, settings, acc, extra, &per_row[static_cast<std::size_t>(y)]);
      img.set(ray.pixel, acc);
    }
  });
  if (counters) {
    for (const auto& c : per_row) {
      counters->rays += c.rays;
      counters->shadow_rays += c.shadow_rays;
    }
  }
  return img;
}

SpectralImage render(const Scene& scene) { return render(scene, scene.render_settings()); }

}  // namespace prism
