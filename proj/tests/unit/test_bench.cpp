// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <png.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "prism/bench.hpp"
#include "prism/image_io.hpp"
#include "support.hpp"

#ifndef PRISM_CLI_PATH
#error "PRISM_CLI_PATH must be defined by the build"
#endif

using namespace prism;

namespace {

const WavelengthGrid kGrid{};

const CmfTable& cmf_d65() {
  static const CmfTable t = CmfTable::load(test::data_dir(), kGrid, test::data_dir() / "cie_d65.txt");
  return t;
}

SpectralImage flat_image(int w, int h, double v) {
  SpectralImage img(w, h, kGrid);
  std::fill(img.data().begin(), img.data().end(), v);
  return img;
}

Scene small_cornell(int size) {
  Scene s = load_scene(test::scenes_dir() / "cornell.scene", {test::data_dir(), nullptr});
  Camera cam = s.camera();
  cam.width = cam.height = size;
  s.set_camera(cam);
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI; returns its exit code.
int cli(const std::string& args) {
  const std::string cmd = std::string(PRISM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::uint8_t> read_png_rgb(const std::filesystem::path& p, int& w, int& h) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  REQUIRE(png_image_begin_read_from_file(&image, p.c_str()));
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  REQUIRE(png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr));
  w = static_cast<int>(image.width);
  h = static_cast<int>(image.height);
  return buf;
}

}  // namespace

TEST_SUITE("bench_cli") {

TEST_CASE("tone mapping") {
  SUBCASE("zero image maps to black") {
    const Rgb8Image out = tone_map(flat_image(4, 3, 0.0), cmf_d65(), {});
    CHECK(out.width == 4);
    CHECK(out.height == 3);
    CHECK(std::all_of(out.pixels.begin(), out.pixels.end(), [](std::uint8_t v) { return v == 0; }));
  }
  SUBCASE("equal-energy radiance at Y = 1 is near white") {
    const SpectralImage img = flat_image(5, 5, 1.0);
    const double y = spectrum_to_xyz(Spectrum(kGrid, 1.0), cmf_d65()).y;
    ToneMapSettings ts;
    ts.exposure = 1.0 / y;
    const Rgb8Image out = tone_map(img, cmf_d65(), ts);
    for (auto v : out.pixels) CHECK(v >= 250);
    CHECK(auto_exposure(img, cmf_d65()) == doctest::Approx(1.0 / y));
  }
  SUBCASE("more exposure never darkens a channel") {
    const SpectralImage img = flat_image(2, 2, 0.05);
    ToneMapSettings lo, hi;
    hi.exposure = 2.0;
    for (Transfer t : {Transfer::srgb, Transfer::power}) {
      lo.transfer = hi.transfer = t;
      const Rgb8Image a = tone_map(img, cmf_d65(), lo), b = tone_map(img, cmf_d65(), hi);
      for (std::size_t i = 0; i < a.pixels.size(); ++i) CHECK(b.pixels[i] > a.pixels[i]);
    }
  }
  SUBCASE("exposure must be positive") {
    ToneMapSettings ts;
    ts.exposure = 0.0;
    CHECK_THROWS_AS(tone_map(flat_image(1, 1, 1.0), cmf_d65(), ts), std::invalid_argument);
  }
  SUBCASE("black image keeps unit auto exposure") {
    CHECK(auto_exposure(flat_image(3, 3, 0.0), cmf_d65()) == 1.0);
  }
  SUBCASE("srgb curve") {
    CHECK(srgb_encode(0.0) == 0.0);
    CHECK(srgb_encode(1.0) == doctest::Approx(1.0));
    CHECK(srgb_encode(0.0031308) == doctest::Approx(12.92 * 0.0031308));
  }
}

TEST_CASE("spectral PFM round trip") {
  test::TempDir dir("pfm");
  SpectralImage img(7, 3, kGrid);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<float>(0.001 * i);
  const auto path = dir.path() / "img.pfm";
  write_spectral_pfm(path, img);
  CHECK(std::filesystem::exists(sidecar_path(path)));
  CHECK(sidecar_path(path).extension() == ".grid");
  const SpectralImage back = read_spectral_pfm(path);
  CHECK(back == img);

  const std::string header = slurp(path).substr(0, 2);
  CHECK(header == "Pf");
  CHECK_THROWS_AS(read_spectral_pfm(dir.write("bad.pfm", "P6\n1 1\n255\n")), ImageIoError);
}

TEST_CASE("PNG writer") {
  test::TempDir dir("png");
  Rgb8Image img{3, 2, {}};
  for (int i = 0; i < 18; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 10));
  write_png(dir.path() / "a.png", img);
  int w = 0, h = 0;
  const auto px = read_png_rgb(dir.path() / "a.png", w, h);
  CHECK(w == 3);
  CHECK(h == 2);
  CHECK(px == img.pixels);
}

TEST_CASE("matrix arguments") {
  CHECK(parse_splits("2,2,1") == Splits{2, 2, 1});
  CHECK(parse_splits("3x1x2") == Splits{3, 1, 2});
  CHECK(parse_splits("1") == Splits{1, 1, 1});
  CHECK(parse_splits("2") == Splits{2, 1, 1});
  CHECK(parse_splits("4") == Splits{2, 2, 1});
  CHECK(parse_splits("8") == Splits{2, 2, 2});
  CHECK(splits_for_count(12) == Splits{3, 2, 2});
  CHECK_THROWS_AS(parse_splits("2,0,1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_splits("2,2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_splits("abc"), std::invalid_argument);

  const auto list = parse_split_list("1 2;4,2x1x1");
  REQUIRE(list.size() == 4);
  CHECK(list[2] == Splits{2, 2, 1});
  CHECK(list[3] == Splits{2, 1, 1});
  CHECK(parse_int_list("1,2,4,8") == std::vector<int>{1, 2, 4, 8});
  CHECK_THROWS_AS(parse_int_list(""), std::invalid_argument);
  CHECK(to_string(Splits{2, 1, 1}) == "2x1x1");

  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("speedups are relative to the baseline cell") {
  BenchReport r;
  r.baseline.wall_seconds = 8.0;
  int workers = 1;
  for (double w : {8.0, 4.0, 2.5}) {
    BenchCell c;
    c.workers = workers;
    workers *= 2;
    c.wall_seconds = w;
    r.cells.push_back(c);
  }
  compute_speedups(r);
  for (const auto& c : r.cells) CHECK(c.speedup * c.wall_seconds == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(r.cells[0].speedup == 1.0);
}

TEST_CASE("run_bench") {
  const Scene s = small_cornell(12);
  SUBCASE("1x1 matrix is the baseline") {
    BenchOptions o;
    o.check_size = 8;
    const BenchReport r = run_bench(s, s.render_settings(), o);
    REQUIRE(r.cells.size() == 1);
    CHECK(r.cells[0].speedup == 1.0);
    CHECK(r.cells[0].runs.size() == 1);
    CHECK(r.render_local_seconds > 0.0);
    CHECK(format_table(r).find("1x1x1") != std::string::npos);
    CHECK(to_json(r)["cells"].size() == 1);
  }
  SUBCASE("work is the same across a row") {
    BenchOptions o;
    o.check_size = 8;
    o.workers = {1, 2};
    o.splits = {{2, 1, 1}, {2, 2, 1}};
    o.repetitions = 2;
    const BenchReport r = run_bench(s, s.render_settings(), o);
    CHECK(r.cells.size() == 4);
    for (const auto& sp : o.splits) {
      const BenchCell* a = r.find(1, sp);
      const BenchCell* b = r.find(2, sp);
      REQUIRE(a);
      REQUIRE(b);
      CHECK(a->rays_traced == b->rays_traced);
      CHECK(a->runs.size() == 2);
    }
    CHECK(r.baseline.splits == Splits{1, 1, 1});
    CHECK(r.baseline.speedup == 1.0);
  }
  SUBCASE("bad repetitions") {
    BenchOptions o;
    o.repetitions = 0;
    CHECK_THROWS_AS(run_bench(s, s.render_settings(), o), ddm::ConfigError);
  }
}

TEST_CASE("command line") {
  test::TempDir dir("cli");
  const std::string cornell = (test::scenes_dir() / "cornell.scene").string();
  const std::string out = dir.path().string();

  // Shrink the demo scene so the CLI runs stay quick. The copy sits next to a
  // link to data/ so its relative paths still resolve.
  std::filesystem::create_directory(dir.path() / "scenes");
  std::filesystem::create_directory_symlink(test::data_dir(), dir.path() / "data");
  std::filesystem::copy_file(test::scenes_dir() / "cornell_sphere.mesh", dir.path() / "scenes/cornell_sphere.mesh");
  std::string text = slurp(test::scenes_dir() / "cornell.scene");
  for (const char* key : {"width = 96", "height = 96"}) {
    const auto at = text.find(key);
    REQUIRE(at != std::string::npos);
    text.replace(at + std::string(key).size() - 2, 2, "24");
  }
  const std::string small = dir.write("scenes/small.scene", text).string();

  SUBCASE("local and ddm write identical spectra") {
    REQUIRE(cli("render --scene " + small + " --out " + out + "/local --mode local") == 0);
    REQUIRE(cli("render --scene " + small + " --out " + out + "/ddm --mode ddm --splits 2,2,1 --workers 2") == 0);
    CHECK(slurp(dir.path() / "local.pfm") == slurp(dir.path() / "ddm.pfm"));
    CHECK(std::filesystem::exists(dir.path() / "local.png"));
    CHECK(std::filesystem::exists(dir.path() / "local.grid"));
  }
  SUBCASE("gi output is deterministic") {
    const std::string args = " --mode gi --photons 2000 --seed 3";
    REQUIRE(cli("render --scene " + small + " --out " + out + "/a" + args) == 0);
    REQUIRE(cli("render --scene " + small + " --out " + out + "/b" + args) == 0);
    CHECK(slurp(dir.path() / "a.pfm") == slurp(dir.path() / "b.pfm"));
  }
  SUBCASE("exit codes") {
    CHECK(cli("render --scene " + out + "/missing.scene --out " + out + "/x") == 2);
    CHECK(cli("render --scene " + dir.write("broken.scene", "[camera]\nfov = wide\n").string() + " --out " + out +
              "/x") == 2);
    CHECK(cli("render --scene " + small + " --out " + out + "/x --mode ddm --splits 0,1,1") == 3);
    CHECK(cli("render --scene " + small + " --out " + out + "/x --mode sideways") == 3);
    CHECK(cli("render --scene " + small + " --out " + out + "/x --mode ddm --budget 1K") == 3);
    CHECK(cli("frobnicate") == 3);
  }
  SUBCASE("a scene without lights renders black") {
    std::string dark = text;
    const auto at = dark.find("[light]");
    REQUIRE(at != std::string::npos);
    dark.erase(at, dark.find("\n\n", at) + 2 - at);
    REQUIRE(dark.find("[light]") == std::string::npos);
    const std::string path = dir.write("scenes/dark.scene", dark).string();
    REQUIRE(cli("render --scene " + path + " --out " + out + "/dark") == 0);
    int w = 0, h = 0;
    const auto px = read_png_rgb(dir.path() / "dark.png", w, h);
    CHECK(w == 24);
    CHECK(std::all_of(px.begin(), px.end(), [](std::uint8_t v) { return v == 0; }));
  }
}

}  // TEST_SUITE
