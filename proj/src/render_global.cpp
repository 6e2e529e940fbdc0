// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/render_global.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <stdexcept>

#include "prism/bytes.hpp"

namespace prism {

PhotonMap::PhotonMap(Kind kind, const WavelengthGrid& grid, std::vector<Photon> photons)
    : kind_(kind), grid_(grid), photons_(std::move(photons)) {
  order_.resize(photons_.size());
  axis_.assign(photons_.size(), 0);
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  build(0, static_cast<std::uint32_t>(order_.size()));
}

void PhotonMap::build(std::uint32_t begin, std::uint32_t end) {
  if (end - begin <= 1) return;
  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.expand(photons_[order_[i]].position);
  const int axis = box.longest_axis();
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = photons_[a].position[axis];
                     const double pb = photons_[b].position[axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  axis_[mid] = static_cast<std::uint8_t>(axis);
  build(begin, mid);
  build(mid + 1, end);
}

void PhotonMap::search(std::uint32_t begin, std::uint32_t end, const Vec3& p, std::size_t k,
                       double& bound, std::vector<Neighbor>& heap) const {
  if (begin >= end) return;
  const std::uint32_t mid = begin + (end - begin) / 2;
  const std::uint32_t idx = order_[mid];
  const Vec3 d = photons_[idx].position - p;
  const Neighbor cand{dot(d, d), idx};
  if (cand.distance2 <= bound && (heap.size() < k || cand < heap.front())) {
    if (heap.size() == k) {
      std::pop_heap(heap.begin(), heap.end());
      heap.pop_back();
    }
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end());
    if (heap.size() == k) bound = std::min(bound, heap.front().distance2);
  }
  const int axis = axis_[mid];
  const double diff = p[axis] - photons_[idx].position[axis];
  const bool left_first = diff < 0.0;
  if (left_first) {
    search(begin, mid, p, k, bound, heap);
    if (diff * diff <= bound) search(mid + 1, end, p, k, bound, heap);
  } else {
    search(mid + 1, end, p, k, bound, heap);
    if (diff * diff <= bound) search(begin, mid, p, k, bound, heap);
  }
}

std::vector<PhotonMap::Neighbor> PhotonMap::k_nearest(const Vec3& p, std::size_t k,
                                                      double max_distance2) const {
  std::vector<Neighbor> heap;
  if (k == 0) return heap;
  heap.reserve(k);
  double bound = max_distance2;
  search(0, static_cast<std::uint32_t>(order_.size()), p, k, bound, heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

Spectrum PhotonMap::total_power() const {
  Spectrum sum(grid_);
  for (const auto& ph : photons_) sum += ph.power;
  return sum;
}

namespace {
constexpr std::uint32_t kPhotonMapVersion = 1;
constexpr char kPhotonMapMagic[4] = {'P', 'M', 'A', 'P'};
}  // namespace

std::vector<std::uint8_t> PhotonMap::dump() const {
  ByteWriter w;
  for (char c : kPhotonMapMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kPhotonMapVersion);
  w.put(static_cast<std::uint8_t>(kind_));
  w.put_f64(grid_.start_nm);
  w.put_f64(grid_.end_nm);
  w.put(static_cast<std::uint32_t>(grid_.bin_count));
  w.put(static_cast<std::uint64_t>(photons_.size()));
  for (const auto& ph : photons_) {
    for (int a = 0; a < 3; ++a) w.put_f64(ph.position[a]);
    for (int a = 0; a < 3; ++a) w.put_f64(ph.direction[a]);
    w.put(static_cast<std::uint8_t>(ph.direct ? 1 : 0));
    for (double v : ph.power.samples()) w.put_f64(v);
  }
  return w.take();
}

PhotonMap PhotonMap::restore(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (char c : kPhotonMapMagic) {
    if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(c)) {
      throw std::runtime_error("photon map: bad magic");
    }
  }
  if (r.get<std::uint32_t>() != kPhotonMapVersion) {
    throw std::runtime_error("photon map: unsupported version");
  }
  const auto kind = static_cast<Kind>(r.get<std::uint8_t>());
  const double start = r.get_f64();
  const double end = r.get_f64();
  const auto bins = r.get<std::uint32_t>();
  const WavelengthGrid grid = WavelengthGrid::make(start, end, bins);
  const auto count = r.get<std::uint64_t>();
  const std::size_t record = 6 * 8 + 1 + std::size_t{bins} * 8;
  if (count > r.remaining() / record) throw TruncatedInput("photon map: truncated");
  std::vector<Photon> photons(count);
  for (auto& ph : photons) {
    for (int a = 0; a < 3; ++a) ph.position[a] = r.get_f64();
    for (int a = 0; a < 3; ++a) ph.direction[a] = r.get_f64();
    ph.direct = r.get<std::uint8_t>() != 0;
    std::vector<double> s(bins);
    for (auto& v : s) v = r.get_f64();
    ph.power = Spectrum(grid, std::move(s));
  }
  if (!r.done()) throw std::runtime_error("photon map: trailing bytes");
  return PhotonMap(kind, grid, std::move(photons));
}

void PhotonMap::save(const std::filesystem::path& path) const {
  const auto bytes = dump();
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

PhotonMap PhotonMap::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return restore(bytes);
}

// ---------------------------------------------------------------------------
// Emission

namespace {

class Sampler {
 public:
  Sampler(std::uint64_t seed, std::uint64_t light, std::uint64_t batch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(light), static_cast<std::uint32_t>(batch),
                      static_cast<std::uint32_t>(batch >> 32)};
    rng_.seed(seq);
  }
  double next() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 rng_;
};

Vec3 uniform_sphere(double u1, double u2) {
  const double z = 1.0 - 2.0 * u1;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Vec3 cosine_hemisphere(const Vec3& n, double u1, double u2) {
  const double r = std::sqrt(u1);
  const double phi = 2.0 * std::numbers::pi * u2;
  const Vec3 local{r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u1))};
  return normalize(Frame::from_normal(n).to_world(local));
}

// Albedo used for Russian roulette and the surviving power weight.
Spectrum diffuse_albedo(const Material& m, const WavelengthGrid& grid) {
  if (const auto* l = std::get_if<Lambertian>(&m)) return l->reflectance;
  const auto& t = std::get<TabulatedBrdf>(m);
  return Spectrum(grid, std::min(1.0, std::numbers::pi * t.mean_value()));
}

struct BatchResult {
  std::vector<Photon> global;
  std::vector<Photon> caustic;
};

void trace_photon(const Scene& scene, const GiSettings& gi, Sampler& rng, Ray ray, Spectrum power,
                  BatchResult& out) {
  bool only_specular = true;
  for (int interaction = 0; interaction <= gi.max_photon_bounces; ++interaction) {
    const auto hit = intersect(scene, ray);
    if (!hit) return;
    const Material& m = scene.materials()[hit->material];
    Vec3 dir;
    if (is_diffuse(m)) {
      Photon ph{hit->position, ray.direction, power, interaction == 0};
      if (interaction > 0 && only_specular) {
        out.caustic.push_back(std::move(ph));
      } else {
        out.global.push_back(std::move(ph));
      }
      const Spectrum albedo = diffuse_albedo(m, scene.grid());
      const double p = std::clamp(albedo.mean(), 0.0, 1.0);
      if (!(rng.next() < p)) return;
      power = power * albedo / p;
      dir = cosine_hemisphere(hit->normal, rng.next(), rng.next());
      only_specular = false;
    } else {
      const auto& glass = std::get<FresnelDielectric>(m);
      const ComplexIor& from = hit->front_face ? glass.exterior_ior : glass.ior;
      const ComplexIor& to = hit->front_face ? glass.ior : glass.exterior_ior;
      const double cos_i = std::clamp(-dot(ray.direction, hit->normal), 0.0, 1.0);
      const FresnelTerms f = fresnel(cos_i, from, to);
      const double eta = from.real_at(589.0) / to.real_at(589.0);
      const auto refracted = refract(ray.direction, hit->normal, eta);
      const double p_reflect = refracted ? std::clamp(f.reflectance.mean(), 0.0, 1.0) : 1.0;
      if (rng.next() < p_reflect) {
        power = refracted ? power * f.reflectance / p_reflect : power;
        dir = normalize(reflect(ray.direction, hit->normal));
      } else {
        power = power * f.transmittance / (1.0 - p_reflect);
        dir = *refracted;
      }
    }
    ray.origin = hit->position;
    ray.direction = dir;
    ray.t_min = scene.shadow_epsilon();
    if (power.is_zero()) return;
  }
}

}  // namespace

PhotonMaps emit_photons(const Scene& scene, const GiSettings& settings, std::uint64_t seed,
                        unsigned threads) {
  if (scene.lights().empty()) throw std::invalid_argument("photon emission needs at least one light");
  const WavelengthGrid& grid = scene.grid();
  const std::uint64_t n = settings.photons_per_light;
  const std::uint64_t per_batch = std::max<std::uint64_t>(1, settings.photons_per_batch);
  const std::uint64_t batches = (n + per_batch - 1) / per_batch;

  PhotonMaps maps;
  maps.emitted = Spectrum(grid);
  maps.emitted_count = n * scene.lights().size();
  if (n == 0) {
    maps.global = PhotonMap(PhotonMap::Kind::global, grid, {});
    maps.caustic = PhotonMap(PhotonMap::Kind::caustic, grid, {});
    return maps;
  }

  const Aabb bounds = scene.bounds();
  const double radius = 0.5 * bounds.diagonal();
  const Vec3 centre = bounds.center();
  std::vector<Spectrum> photon_power;
  for (const Light& light : scene.lights()) {
    Spectrum flux = std::holds_alternative<PointLight>(light.kind)
                        ? light.emission * (4.0 * std::numbers::pi)
                        : light.emission * (std::numbers::pi * radius * radius);
    maps.emitted += flux;
    photon_power.push_back(flux / static_cast<double>(n));
  }

  const std::size_t jobs = scene.lights().size() * batches;
  std::vector<BatchResult> results(jobs);
  parallel_rows(static_cast<int>(jobs), threads, [&](int job) {
    const std::uint64_t li = static_cast<std::uint64_t>(job) / batches;
    const std::uint64_t b = static_cast<std::uint64_t>(job) % batches;
    const Light& light = scene.lights()[li];
    Sampler rng(seed, li, b);
    const std::uint64_t first = b * per_batch;
    const std::uint64_t last = std::min(n, first + per_batch);
    for (std::uint64_t i = first; i < last; ++i) {
      Ray ray;
      if (const auto* p = std::get_if<PointLight>(&light.kind)) {
        ray.origin = p->position;
        const double u1 = rng.next();
        ray.direction = uniform_sphere(u1, rng.next());
      } else {
        const Vec3 d = std::get<DirectionalLight>(light.kind).direction;
        const Frame f = Frame::from_normal(d);
        const double r = radius * std::sqrt(rng.next());
        const double phi = 2.0 * std::numbers::pi * rng.next();
        ray.origin = centre - d * (1.01 * radius) +
                     f.to_world({r * std::cos(phi), r * std::sin(phi), 0.0});
        ray.direction = d;
      }
      trace_photon(scene, settings, rng, ray, photon_power[li], results[static_cast<std::size_t>(job)]);
    }
  });

  std::vector<Photon> global, caustic;
  for (auto& r : results) {
    std::move(r.global.begin(), r.global.end(), std::back_inserter(global));
    std::move(r.caustic.begin(), r.caustic.end(), std::back_inserter(caustic));
  }
  maps.global = PhotonMap(PhotonMap::Kind::global, grid, std::move(global));
  maps.caustic = PhotonMap(PhotonMap::Kind::caustic, grid, std::move(caustic));
  return maps;
}

Spectrum estimate_radiance(const PhotonMap& map, const Scene& scene, const Hit& hit,
                           const Vec3& wo, std::size_t k, double max_radius) {
  Spectrum out(scene.grid());
  if (map.empty() || k == 0) return out;
  const auto nearest = map.k_nearest(hit.position, k, max_radius * max_radius);
  if (nearest.size() < k) return out;
  const double r2 = nearest.back().distance2;
  if (!(r2 > 0.0)) return out;
  const Material& m = scene.materials()[hit.material];
  for (const auto& nb : nearest) {
    const Photon& ph = map.photons()[nb.index];
    const Vec3 wi = -ph.direction;
    if (!(dot(wi, hit.normal) > 0.0)) continue;
    out += eval_brdf(m, {wi, wo, hit.normal}) * ph.power;
  }
  return out / (std::numbers::pi * r2);
}

SpectralImage render_gi(const Scene& scene, const RenderSettings& render_settings,
                        const GiSettings& gi_settings, const PhotonMaps& maps) {
  const PhotonMap indirect = maps.global.filtered([](const Photon& p) { return !p.direct; });
  const std::size_t k = static_cast<std::size_t>(std::max(0, gi_settings.k_nearest));
  const double max_radius = gi_settings.max_search_radius_relative * scene.bounds().diagonal();
  if (maps.caustic.empty() && indirect.empty()) return render(scene, render_settings);

  const HitExtra extra = [&](const Ray& ray, const Hit& hit, Spectrum& acc) {
    if (!is_diffuse(scene.materials()[hit.material])) return;
    const Vec3 wo = -ray.direction;
    Spectrum l = estimate_radiance(maps.caustic, scene, hit, wo, k, max_radius);
    l += estimate_radiance(indirect, scene, hit, wo, k, max_radius);
    acc += ray.throughput * l;
  };
  return render(scene, render_settings, &extra);
}

SpectralImage render_gi(const Scene& scene, const RenderSettings& render_settings,
                        const GiSettings& gi_settings, GiStats* stats) {
  PhotonMaps maps;
  if (gi_settings.photons_per_light > 0 && !scene.lights().empty()) {
    maps = emit_photons(scene, gi_settings, gi_settings.seed, render_settings.threads);
  }
  if (stats) {
    stats->global_photons = maps.global.size();
    stats->caustic_photons = maps.caustic.size();
    stats->indirect_photons =
        static_cast<std::size_t>(std::count_if(maps.global.photons().begin(), maps.global.photons().end(),
                                               [](const Photon& p) { return !p.direct; }));
  }
  return render_gi(scene, render_settings, gi_settings, maps);
}

}  // namespace prism
