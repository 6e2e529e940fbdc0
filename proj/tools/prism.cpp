// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

// prism: render scenes and run the domain-decomposition benchmark.
//
//   prism render --scene room.scene --mode ddm --splits 2,2,1 --workers 4 --out out/room
//   prism bench --scene room.scene --workers 1,2,4,8 --splits 1,2,4,8 --reps 3 --out out/bench
//
// Exit codes: 0 ok, 2 scene error, 3 configuration error, 4 runtime error,
// 5 equivalence pre-check failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "prism/bench.hpp"
#include "prism/ddm/engine.hpp"
#include "prism/image_io.hpp"
#include "prism/render_global.hpp"
#include "prism/render_local.hpp"
#include "prism/scene.hpp"

#ifndef PRISM_DATA_DIR
#define PRISM_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace prism;

namespace {

enum Exit { kOk = 0, kScene = 2, kConfig = 3, kRuntime = 4, kEquivalence = 5 };

struct Common {
  std::string scene;
  std::string out;
  std::string data_dir;
  std::string transport = "socket";
  std::string budget;
  bool unordered = false;
  bool approximate_shadows = false;
};

struct RenderArgs {
  std::string mode = "local";
  std::string splits = "1,1,1";
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> photons;
  unsigned threads = 0;
  std::string exposure = "auto";
  std::string save_photons;
};

struct BenchArgs {
  std::string workers = "1";
  std::string splits = "1";
  int reps = 1;
};

fs::path data_dir(const Common& c) {
  if (!c.data_dir.empty()) return c.data_dir;
  if (const char* env = std::getenv("PRISM_DATA_DIR")) return env;
  return PRISM_DATA_DIR;
}

std::size_t parse_bytes(const std::string& text) {
  if (text.empty()) return std::numeric_limits<std::size_t>::max();
  std::size_t used = 0;
  double v = std::stod(text, &used);
  const std::string suffix = text.substr(used);
  if (suffix == "k" || suffix == "K") v *= 1024.0;
  else if (suffix == "m" || suffix == "M") v *= 1024.0 * 1024.0;
  else if (suffix == "g" || suffix == "G") v *= 1024.0 * 1024.0 * 1024.0;
  else if (!suffix.empty()) throw std::invalid_argument("bad byte size '" + text + "'");
  if (!(v > 0)) throw std::invalid_argument("budget must be positive");
  return static_cast<std::size_t>(v);
}

ddm::DdmConfig ddm_config(const Common& c) {
  ddm::DdmConfig cfg;
  if (c.transport == "socket") cfg.transport = ddm::TransportKind::socket;
  else if (c.transport == "inproc") cfg.transport = ddm::TransportKind::in_process;
  else throw ddm::ConfigError("unknown transport '" + c.transport + "' (socket|inproc)");
  cfg.budget_bytes = parse_bytes(c.budget);
  cfg.ordered = !c.unordered;
  cfg.approximate_shadows = c.approximate_shadows;
  return cfg;
}

void ensure_parent(const fs::path& prefix) {
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
}

int cmd_render(const Common& c, const RenderArgs& a) {
  const fs::path dir = data_dir(c);
  Scene scene = load_scene(c.scene, {dir, nullptr});
  RenderSettings rs = scene.render_settings();
  rs.threads = a.threads;

  SpectralImage image;
  if (a.mode == "local") {
    image = render(scene, rs);
  } else if (a.mode == "gi") {
    GiSettings gi = scene.gi_settings();
    if (a.seed) gi.seed = *a.seed;
    if (a.photons) gi.photons_per_light = *a.photons;
    if (gi.photons_per_light == 0 || scene.lights().empty()) {
      image = render_gi(scene, rs, gi);
    } else {
      const PhotonMaps maps = emit_photons(scene, gi, gi.seed, rs.threads);
      spdlog::info("photons: {} global, {} caustic", maps.global.size(), maps.caustic.size());
      if (!a.save_photons.empty()) {
        ensure_parent(a.save_photons);
        maps.global.save(a.save_photons + ".global.pmap");
        maps.caustic.save(a.save_photons + ".caustic.pmap");
      }
      image = render_gi(scene, rs, gi, maps);
    }
  } else if (a.mode == "ddm") {
    ddm::DdmConfig cfg = ddm_config(c);
    cfg.splits = parse_splits(a.splits);
    cfg.workers = a.workers;
    ddm::RunStats stats;
    image = ddm::run_distributed(scene, cfg, rs, &stats);
    spdlog::info("ddm: {} sub-domains, rays {}, crossings {}, loads {}, unloads {}, migrations {}",
                 stats.domains, stats.total.rays_traced, stats.total.crossings, stats.total.loads,
                 stats.total.unloads, stats.migrations);
  } else {
    throw ddm::ConfigError("unknown mode '" + a.mode + "' (local|gi|ddm)");
  }

  const CmfTable display = CmfTable::load(dir, scene.grid(), dir / "cie_d65.txt");
  ToneMapSettings tm;
  tm.exposure = a.exposure == "auto" ? auto_exposure(image, display) : std::stod(a.exposure);
  const fs::path prefix = c.out;
  ensure_parent(prefix);
  write_spectral_pfm(fs::path(c.out + ".pfm"), image);
  write_png(fs::path(c.out + ".png"), tone_map(image, display, tm));
  std::cout << "wrote " << c.out << ".pfm, " << c.out << ".grid, " << c.out << ".png\n";
  return kOk;
}

int cmd_bench(const Common& c, const BenchArgs& a) {
  Scene scene = load_scene(c.scene, {data_dir(c), nullptr});
  BenchOptions o;
  o.workers = parse_int_list(a.workers);
  o.splits = parse_split_list(a.splits);
  o.repetitions = a.reps;
  o.config = ddm_config(c);
  BenchReport report = run_bench(scene, scene.render_settings(), o);
  report.scene = c.scene;
  const std::string table = format_table(report);
  std::cout << table;
  ensure_parent(c.out);
  std::ofstream(c.out + ".txt") << table;
  std::ofstream(c.out + ".json") << to_json(report).dump(2) << "\n";
  std::cout << "wrote " << c.out << ".txt, " << c.out << ".json\n";
  return kOk;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("prism");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("PRISM_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"prism spectral renderer"};
  app.require_subcommand(1);
  Common common;
  RenderArgs ra;
  BenchArgs ba;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scene", common.scene, "scene file")->required();
    sub->add_option("--out", common.out, "output prefix")->required();
    sub->add_option("--data-dir", common.data_dir, "directory with CIE tables");
    sub->add_option("--transport", common.transport, "socket|inproc");
    sub->add_option("--budget", common.budget, "per-worker sub-domain bytes (K/M/G suffix)");
    sub->add_flag("--unordered", common.unordered, "sum contributions in arrival order");
    sub->add_flag("--approximate-shadows", common.approximate_shadows, "local-only shadow tests");
  };

  CLI::App* render_cmd = app.add_subcommand("render", "render a scene");
  add_common(render_cmd);
  render_cmd->add_option("--mode", ra.mode, "local|gi|ddm");
  render_cmd->add_option("--splits", ra.splits, "NX,NY,NZ, NXxNYxNZ or a sub-domain count");
  render_cmd->add_option("--workers", ra.workers, "DDM worker count");
  render_cmd->add_option("--seed", ra.seed, "photon seed");
  render_cmd->add_option("--photons", ra.photons, "photons per light");
  render_cmd->add_option("--threads", ra.threads, "render threads, 0 = all cores");
  render_cmd->add_option("--exposure", ra.exposure, "PNG exposure or 'auto'");
  render_cmd->add_option("--save-photons", ra.save_photons, "prefix for photon map dumps");

  CLI::App* bench_cmd = app.add_subcommand("bench", "time the DDM matrix");
  add_common(bench_cmd);
  bench_cmd->add_option("--workers", ba.workers, "worker counts, e.g. 1,2,4,8");
  bench_cmd->add_option("--splits", ba.splits, "sub-domain counts or NXxNYxNZ, e.g. 1,2,4,8");
  bench_cmd->add_option("--reps", ba.reps, "repetitions per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*render_cmd) return cmd_render(common, ra);
    return cmd_bench(common, ba);
  } catch (const SceneParseError& e) {
    std::cerr << "scene parse error: " << e.what() << "\n";
    return kScene;
  } catch (const SceneValidationError& e) {
    std::cerr << "invalid scene:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
    return kScene;
  } catch (const EquivalenceError& e) {
    std::cerr << e.what() << "\n";
    return kEquivalence;
  } catch (const ddm::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
