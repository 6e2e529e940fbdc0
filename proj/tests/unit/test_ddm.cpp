// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <set>

#include "prism/ddm/engine.hpp"
#include "support.hpp"

using namespace prism;
using namespace prism::ddm;

namespace {

const WavelengthGrid kGrid{};

// Two separate boxes on either side of x = 0.
Scene two_clusters() {
  Scene s(kGrid);
  const auto m = s.add_material("m", Lambertian{Spectrum(kGrid, 0.5)});
  s.add_mesh(test::box_mesh({-3, 0, 0}, {-2, 1, 1}, m));
  s.add_mesh(test::box_mesh({2, 0, 0}, {3, 1, 1}, m));
  s.add_light({PointLight{{0, 3, 0.5}}, Spectrum(kGrid, 2.0)});
  s.set_camera(Camera::look_at({0, 0.5, 6}, {0, 0.5, 0.5}, {0, 1, 0}, 8, 8, 1.0));
  s.finalize();
  return s;
}

// Floor spanning the whole scene and a glass block on top of it.
Scene glass_scene() {
  Scene s(kGrid);
  const auto floor = s.add_material("floor", Lambertian{Spectrum(kGrid, 0.7)});
  const auto glass = s.add_material(
      "glass", FresnelDielectric{ComplexIor::constant(kGrid, 1.5), ComplexIor::constant(kGrid, 1.0)});
  s.add_mesh(test::quad_mesh({-2, 0, -2}, {-2, 0, 2}, {2, 0, 2}, {2, 0, -2}, floor));
  s.add_mesh(test::box_mesh({-0.5, 0.0, -0.5}, {0.5, 1.0, 0.5}, glass));
  s.add_mesh(test::quad_mesh({-2, 0, -2}, {2, 0, -2}, {2, 2, -2}, {-2, 2, -2}, floor));
  s.add_light({PointLight{{1.0, 1.8, 1.0}}, Spectrum(kGrid, 3.0)});
  s.set_camera(Camera::look_at({0.3, 1.5, 4}, {0, 0.4, 0}, {0, 1, 0}, 16, 16, 0.9));
  s.render_settings().max_bounces = 5;
  s.finalize();
  return s;
}

const Scene& cornell() {
  static const Scene s = [] {
    Scene c = load_scene(test::scenes_dir() / "cornell.scene", {test::data_dir(), nullptr});
    Camera cam = c.camera();
    cam.width = cam.height = 20;
    c.set_camera(cam);
    return c;
  }();
  return s;
}

Ray make_ray(const Vec3& o, const Vec3& d) {
  Ray r;
  r.origin = o;
  r.direction = normalize(d);
  r.throughput = Spectrum(kGrid, 1.0);
  r.path_key = kRayKeySuffix;
  return r;
}

std::vector<std::uint8_t> roundtrip(const Message& m) {
  const auto bytes = encode(m, 3);
  const Decoded d = decode(bytes, kGrid);
  CHECK(d.sender == 3);
  CHECK(kind_of(d.message) == kind_of(m));
  const auto again = encode(d.message, 3);
  CHECK(again == bytes);
  return bytes;
}

}  // namespace

TEST_SUITE("ddm") {

TEST_CASE("partition") {
  SUBCASE("one cell holds everything") {
    const Scene s = two_clusters();
    const Partition p = partition(s, {1, 1, 1});
    REQUIRE(p.size() == 1);
    CHECK(p.domains[0].triangles.size() == s.triangles_by_id().size());
    CHECK(p.triangle_references() == s.triangles_by_id().size());
  }
  SUBCASE("two clusters land in two cells") {
    const Scene s = two_clusters();
    const Partition p = partition(s, {2, 1, 1});
    REQUIRE(p.size() == 2);
    CHECK(p.domains[0].triangles.size() == 12);
    CHECK(p.domains[1].triangles.size() == 12);
    for (auto id : p.domains[0].triangles) CHECK(s.triangles_by_id()[id].bounds().hi.x <= -2.0);
    for (auto id : p.domains[1].triangles) CHECK(s.triangles_by_id()[id].bounds().lo.x >= 2.0);
    CHECK(p.domains[0].neighbors[face_index(0, true)] == 1);
    CHECK(p.domains[1].neighbors[face_index(0, false)] == 0);
    CHECK(p.domains[0].neighbors[face_index(0, false)] == kExterior);
  }
  SUBCASE("straddling triangles are duplicated") {
    const Scene s = glass_scene();
    const Partition p = partition(s, {2, 1, 2});
    CHECK(p.triangle_references() > s.triangles_by_id().size());
    std::set<std::uint32_t> seen;
    for (const auto& d : p.domains) seen.insert(d.triangles.begin(), d.triangles.end());
    CHECK(seen.size() == s.triangles_by_id().size());
  }
  SUBCASE("neighbors are symmetric and locate finds each cell") {
    const Partition p = partition(cornell(), {3, 2, 2});
    REQUIRE(p.size() == 12);
    for (const auto& d : p.domains) {
      CHECK(p.locate(d.box.center()) == d.id);
      for (int a = 0; a < 3; ++a) {
        for (bool pos : {false, true}) {
          const auto n = d.neighbors[face_index(a, pos)];
          if (n == kExterior) continue;
          CHECK(p.domains[static_cast<std::size_t>(n)].neighbors[face_index(a, !pos)] ==
                static_cast<std::int32_t>(d.id));
        }
      }
    }
  }
  SUBCASE("bad split counts are rejected") {
    CHECK_THROWS_AS(partition(cornell(), {0, 1, 1}), std::invalid_argument);
  }
}

TEST_CASE("trace_in_subdomain") {
  const RenderSettings rs;

  SUBCASE("a ray through empty space crosses at the split plane") {
    const Scene s = two_clusters();
    const Partition p = partition(s, {2, 1, 1});
    const LoadedSubDomain left = load_subdomain(s, p.domains[0]);
    const Ray r = make_ray({-1.5, 0.5, 0.5}, {1, 0, 0});
    const auto rec = BoundaryRayRecord::from_ray(r, 0);
    const TraceOutcome out = trace_in_subdomain(s, p, left, rec, rs);
    REQUIRE(out.kind == TraceOutcome::Kind::crossing);
    REQUIRE(out.crossing);
    CHECK(out.crossing->destination == 1);
    CHECK(out.crossing->crossings == 1);
    CHECK(out.crossing->entry().x == doctest::Approx(p.planes[0][1]).epsilon(1e-12));
    CHECK(out.crossing->origin.x == r.origin.x);
  }
  SUBCASE("leaving through an exterior face escapes") {
    const Scene s = two_clusters();
    const Partition p = partition(s, {2, 1, 1});
    const LoadedSubDomain left = load_subdomain(s, p.domains[0]);
    const auto rec = BoundaryRayRecord::from_ray(make_ray({-1.5, 0.5, 0.5}, {0, 1, 0}), 0);
    CHECK(trace_in_subdomain(s, p, left, rec, rs).kind == TraceOutcome::Kind::escaped);
  }
  SUBCASE("entry outside the box is a logic error") {
    const Scene s = two_clusters();
    const Partition p = partition(s, {2, 1, 1});
    const LoadedSubDomain left = load_subdomain(s, p.domains[0]);
    const auto rec = BoundaryRayRecord::from_ray(make_ray({2.5, 2.0, 0.5}, {1, 0, 0}), 0);
    CHECK_THROWS_AS(trace_in_subdomain(s, p, left, rec, rs), std::logic_error);
  }
  SUBCASE("a triangle shared by two cells gives the same hit in both") {
    const Scene s = glass_scene();
    const Partition p = partition(s, {2, 1, 1});
    // Floor triangles straddle x = 0; hit them just either side of the split.
    for (double x : {-1e-3, 1e-3}) {
      const Ray r = make_ray({x, 1.5, 1.5}, {0, -1, 0});
      const auto whole = intersect(s, r);
      REQUIRE(whole);
      const std::uint32_t cell = p.locate(r.origin);
      const LoadedSubDomain sd = load_subdomain(s, p.domains[cell]);
      const TraceOutcome out = trace_in_subdomain(s, p, sd, BoundaryRayRecord::from_ray(r, cell), rs);
      REQUIRE(out.hit);
      CHECK(out.hit->t == whole->t);
      CHECK(out.hit->triangle == whole->triangle);
    }
  }
  SUBCASE("hitting glass yields the same children as the monolithic tracer") {
    const Scene s = glass_scene();
    const Partition p = partition(s, {2, 2, 2});
    const Ray r = make_ray({0.1, 2.5, 0.2}, {0.05, -1, 0.02});
    const auto h = intersect(s, r);
    REQUIRE(h);
    const HitExpansion ex = expand_hit(s, r, *h, s.render_settings());
    REQUIRE(ex.children.size() == 2);

    // Follow the record through the grid until it hits something.
    BoundaryRayRecord rec = BoundaryRayRecord::from_ray(r, 0);
    const double t0 = slab_span(p.box, r.origin, reciprocal(r.direction)).t_enter;
    rec.t_entry = t0;
    rec.destination = static_cast<std::int32_t>(p.locate(rec.entry()));
    TraceOutcome out;
    for (int guard = 0; guard < 10; ++guard) {
      const LoadedSubDomain sd = load_subdomain(s, p.domains[static_cast<std::size_t>(rec.destination)]);
      out = trace_in_subdomain(s, p, sd, rec, s.render_settings());
      if (out.kind != TraceOutcome::Kind::crossing) break;
      rec = *out.crossing;
    }
    REQUIRE(out.kind == TraceOutcome::Kind::spawn_set);
    CHECK(out.hit->t == h->t);
    REQUIRE(out.local.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      const Ray c = out.local[i].ray();
      CHECK(c.origin == ex.children[i].origin);
      CHECK(c.direction == ex.children[i].direction);
      CHECK(c.throughput == ex.children[i].throughput);
      CHECK(c.path_key == ex.children[i].path_key);
      CHECK(c.depth == ex.children[i].depth);
      CHECK(p.domains[static_cast<std::size_t>(out.local[i].destination)].box.contains(out.local[i].entry(), 1e-9));
    }
    CHECK(out.contributions.size() + out.probes.size() <= s.lights().size());
  }
}

TEST_CASE("wire codec round trips every kind") {
  BoundaryRayRecord ray;
  ray.origin = {1, 2, 3};
  ray.direction = normalize(Vec3{0.1, -1, 0.3});
  ray.t_entry = 0.25;
  ray.t_min = 1e-4;
  ray.throughput = Spectrum(kGrid, 0.3);
  ray.pixel = 77;
  ray.path_key = child_path_key(kRayKeySuffix, 1, 2);
  ray.depth = 1;
  ray.destination = 4;
  ray.crossings = 2;
  roundtrip(ray);
  const Decoded dr = decode(encode(ray, 0), kGrid);
  const auto& back = std::get<BoundaryRayRecord>(dr.message);
  CHECK(back.t_max == ray.t_max);
  CHECK(back.throughput == ray.throughput);
  CHECK(back.path_key == ray.path_key);

  ShadowProbeRecord probe;
  probe.origin = {0, 1, 0};
  probe.direction = {0, 1, 0};
  probe.t_max = 3.0;
  probe.contribution = Spectrum(kGrid, 0.01);
  probe.path_key = 0x12340000ull | 2;
  roundtrip(probe);

  roundtrip(ShadowAnswer{5, 0xABCDull, true, Spectrum(kGrid, 0.5)});
  roundtrip(Contribution{9, kRayKeySuffix, Spectrum(kGrid, 2.0)});
  roundtrip(OwnershipUpdate{7, 3, 1});
  roundtrip(Terminate{});

  Status st;
  st.worker = 2;
  st.idle = true;
  st.registry_version = 4;
  st.created = {{1, 2}, {3, 4}};
  st.completed = {{5, 6}};
  st.backlog = {{0, 10, true}, {3, 0, false}};
  st.counters.rays_traced = 123;
  st.error = "boom";
  roundtrip(st);

  Handshake hs;
  hs.grid = kGrid;
  hs.domains = 8;
  roundtrip(hs);
}

TEST_CASE("wire codec rejects malformed input") {
  const auto bytes = encode(Contribution{1, 2, Spectrum(kGrid, 1.0)}, 1);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode(truncated, kGrid), ProtocolError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode(trailing, kGrid), ProtocolError);
  CHECK_THROWS_AS(decode(std::vector<std::uint8_t>{}, kGrid), ProtocolError);
  // A wrong kind byte somewhere in the header must not decode silently.
  bool rejected_unknown = false;
  for (std::size_t i = 0; i < std::min<std::size_t>(bytes.size(), 12); ++i) {
    auto bad = bytes;
    bad[i] = 0xEE;
    try {
      decode(bad, kGrid);
    } catch (const ProtocolError&) {
      rejected_unknown = true;
    }
  }
  CHECK(rejected_unknown);
}

TEST_CASE("in-process transport") {
  SUBCASE("per-sender FIFO") {
    auto hub = InProcessHub::create(3);
    auto a = hub->endpoint(0), b = hub->endpoint(1), c = hub->endpoint(2);
    CHECK(a->size() == 3);
    CHECK(c->rank() == 2);
    for (std::uint8_t i = 0; i < 50; ++i) {
      a->send(2, {i});
      b->send(2, {static_cast<std::uint8_t>(100 + i)});
    }
    int next_a = 0, next_b = 100;
    for (int i = 0; i < 100; ++i) {
      auto e = c->receive(std::chrono::seconds(1));
      REQUIRE(e);
      if (e->from == 0) {
        CHECK(e->bytes[0] == next_a++);
      } else {
        CHECK(e->from == 1);
        CHECK(e->bytes[0] == next_b++);
      }
    }
    CHECK_FALSE(c->receive(std::chrono::milliseconds(1)));
  }
  SUBCASE("delays keep per-sender order") {
    auto hub = InProcessHub::create(2, {42, std::chrono::microseconds(300)});
    auto a = hub->endpoint(0), b = hub->endpoint(1);
    for (std::uint8_t i = 0; i < 40; ++i) a->send(1, {i});
    for (std::uint8_t i = 0; i < 40; ++i) {
      auto e = b->receive(std::chrono::seconds(2));
      REQUIRE(e);
      CHECK(e->bytes[0] == i);
    }
  }
}

TEST_CASE("socket transport across processes") {
  SocketMesh mesh(2);
  const pid_t pid = fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    auto ep = mesh.endpoint(1);
    int status = 0;
    for (int i = 0; i < 200; ++i) {
      std::vector<std::uint8_t> payload(static_cast<std::size_t>(i * 37 % 5000));
      for (std::size_t k = 0; k < payload.size(); ++k) payload[k] = static_cast<std::uint8_t>(k + i);
      ep->send(0, payload);
    }
    ep->flush();
    auto back = ep->receive(std::chrono::seconds(10));
    if (!back || back->bytes != std::vector<std::uint8_t>{9, 9}) status = 1;
    _exit(status);
  }
  auto ep = mesh.endpoint(0);
  bool ok = true;
  for (int i = 0; i < 200; ++i) {
    auto e = ep->receive(std::chrono::seconds(10));
    if (!e || e->from != 1 || e->bytes.size() != static_cast<std::size_t>(i * 37 % 5000)) {
      ok = false;
      break;
    }
    for (std::size_t k = 0; k < e->bytes.size(); ++k) {
      ok = ok && e->bytes[k] == static_cast<std::uint8_t>(k + i);
    }
  }
  ep->send(1, {9, 9});
  ep->flush();
  int wstatus = 0;
  waitpid(pid, &wstatus, 0);
  CHECK(ok);
  CHECK(WIFEXITED(wstatus));
  CHECK(WEXITSTATUS(wstatus) == 0);
}

TEST_CASE("registry, homes and routing") {
  Registry reg({0, 1, 0});
  CHECK(reg.owner(1) == 1);
  CHECK_THROWS_AS(reg.owner(3), ProtocolError);
  CHECK_THROWS_AS(reg.owner(-2), ProtocolError);
  CHECK(reg.apply({1, 2, 1}));
  CHECK(reg.owner(2) == 1);
  CHECK_FALSE(reg.apply({1, 2, 0}));
  CHECK(reg.owner(2) == 1);
  CHECK(reg.version() == 1);

  BoundaryRayRecord r;
  r.destination = kExterior;
  CHECK(route(r, reg).gatherer);
  r.destination = 2;
  CHECK_FALSE(route(r, reg).gatherer);
  CHECK(route(r, reg).worker == 1);

  const Partition p = partition(cornell(), {2, 2, 2});
  const auto homes = assign_homes(p, 3);
  REQUIRE(homes.size() == 8);
  std::vector<std::uint32_t> order(8);
  for (std::uint32_t i = 0; i < 8; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return p.domains[a].footprint_bytes > p.domains[b].footprint_bytes;
  });
  for (std::size_t i = 0; i < 8; ++i) CHECK(homes[order[i]] == i % 3);
  CHECK_THROWS_AS(assign_homes(p, 0), ConfigError);
}

TEST_CASE("configuration errors") {
  const Scene& s = cornell();
  DdmConfig cfg;
  cfg.splits = {2, 1, 1};
  cfg.budget_bytes = 64;
  try {
    run_distributed(s, cfg, s.render_settings());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sub-domain") != std::string::npos);
  }
  cfg.budget_bytes = std::numeric_limits<std::size_t>::max();
  cfg.workers = 0;
  CHECK_THROWS_AS(run_distributed(s, cfg, s.render_settings()), ConfigError);
}

TEST_CASE("distributed render equals the single-domain render") {
  const Scene& s = cornell();
  const SpectralImage reference = render(s);

  SUBCASE("in-process, several layouts") {
    for (int workers : {1, 2, 3}) {
      for (std::array<int, 3> splits : {std::array{1, 1, 1}, std::array{2, 1, 1}, std::array{2, 2, 2},
                                        std::array{3, 1, 2}}) {
        DdmConfig cfg;
        cfg.workers = workers;
        cfg.splits = splits;
        RunStats stats;
        CHECK(run_distributed(s, cfg, s.render_settings(), &stats) == reference);
        CHECK(stats.ledger.in_flight() == 0);
        CHECK(stats.ledger.duplicate_ids == 0);
        CHECK(stats.duplicate_contributions == 0);
        CHECK(stats.primary_rays == 400);
      }
    }
  }
  SUBCASE("socket transport") {
    DdmConfig cfg;
    cfg.workers = 2;
    cfg.splits = {2, 2, 1};
    cfg.transport = TransportKind::socket;
    CHECK(run_distributed(s, cfg, s.render_settings()) == reference);
  }
  SUBCASE("glass scene with migration and a tight budget") {
    const Scene g = glass_scene();
    const Partition p = partition(g, {2, 2, 2});
    DdmConfig cfg;
    cfg.workers = 2;
    cfg.splits = {2, 2, 2};
    cfg.budget_bytes = p.largest_footprint() * 2;
    cfg.unload_low = 1;
    cfg.unload_high = 2;
    cfg.batch_size = 4;
    RunStats stats;
    CHECK(run_distributed(g, cfg, g.render_settings(), &stats) == render(g));
    CHECK(stats.total.budget_violations == 0);
    CHECK(stats.total.peak_loaded_bytes <= cfg.budget_bytes);
  }
  SUBCASE("random message delays") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      DdmConfig cfg;
      cfg.workers = 3;
      cfg.splits = {2, 2, 1};
      cfg.delays = {seed, std::chrono::microseconds(200)};
      cfg.batch_size = 8;
      RunStats stats;
      CHECK(run_distributed(s, cfg, s.render_settings(), &stats) == reference);
      CHECK(stats.ledger.rays_created == stats.ledger.rays_completed);
      CHECK(stats.ledger.probes_created == stats.ledger.probes_completed);
      CHECK(stats.ledger.duplicate_ids == 0);
    }
  }
  SUBCASE("unordered sums stay close") {
    DdmConfig cfg;
    cfg.workers = 2;
    cfg.splits = {2, 2, 1};
    cfg.ordered = false;
    const SpectralImage img = run_distributed(s, cfg, s.render_settings());
    for (std::size_t k = 0; k < img.data().size(); ++k) {
      CHECK(std::abs(img.data()[k] - reference.data()[k]) <= 1e-4 * std::max(1.0, reference.data()[k]));
    }
  }
  SUBCASE("approximate shadows only ever add light") {
    DdmConfig cfg;
    cfg.splits = {2, 2, 2};
    cfg.approximate_shadows = true;
    const SpectralImage img = run_distributed(s, cfg, s.render_settings());
    for (std::size_t k = 0; k < img.data().size(); ++k) CHECK(img.data()[k] >= reference.data()[k] * (1 - 1e-12));
  }
}

}  // TEST_SUITE
