// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>

#include "prism/bytes.hpp"

namespace prism {

double srgb_encode(double v) {
  if (v <= 0.0031308) return 12.92 * v;
  return 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

namespace {

std::uint8_t quantize(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

}  // namespace

Rgb8Image tone_map(const SpectralImage& image, const CmfTable& cmf, const ToneMapSettings& settings) {
  if (!(settings.exposure > 0.0)) throw std::invalid_argument("tone map exposure must be > 0");
  if (settings.transfer == Transfer::power && !(settings.gamma > 0.0)) {
    throw std::invalid_argument("tone map gamma must be > 0");
  }
  Rgb8Image out;
  out.width = image.width();
  out.height = image.height();
  out.pixels.resize(3 * image.pixel_count());
  auto transfer = [&](double v) {
    v = std::max(0.0, v * settings.exposure);
    return settings.transfer == Transfer::srgb ? srgb_encode(v) : std::pow(v, 1.0 / settings.gamma);
  };
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const ColorRGB rgb = xyz_to_rgb(spectrum_to_xyz(image.spectrum(i), cmf));
    out.pixels[3 * i] = quantize(transfer(rgb.r));
    out.pixels[3 * i + 1] = quantize(transfer(rgb.g));
    out.pixels[3 * i + 2] = quantize(transfer(rgb.b));
  }
  return out;
}

double auto_exposure(const SpectralImage& image, const CmfTable& cmf) {
  std::vector<double> ys;
  ys.reserve(image.pixel_count());
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const double y = spectrum_to_xyz(image.spectrum(i), cmf).y;
    if (y > 0.0 && std::isfinite(y)) ys.push_back(y);
  }
  if (ys.empty()) return 1.0;
  const auto k = static_cast<std::size_t>(0.99 * static_cast<double>(ys.size() - 1));
  std::nth_element(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(k), ys.end());
  return 1.0 / ys[k];
}

// ---------------------------------------------------------------------------
// PFM

std::filesystem::path sidecar_path(const std::filesystem::path& pfm_path) {
  auto p = pfm_path;
  p.replace_extension(".grid");
  return p;
}

void write_spectral_pfm(const std::filesystem::path& path, const SpectralImage& image) {
  const std::size_t bins = image.grid().bin_count;
  const auto w = static_cast<std::size_t>(image.width());
  ByteWriter body;
  const std::string header = "Pf\n" + std::to_string(w * bins) + " " +
                             std::to_string(image.height()) + "\n-1.0\n";
  for (char c : header) body.put(static_cast<std::uint8_t>(c));
  for (int y = image.height() - 1; y >= 0; --y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (double v : image.pixel(static_cast<std::size_t>(y) * w + x)) body.put_f32(static_cast<float>(v));
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ImageIoError("cannot write " + path.string());
  const auto& buf = body.buffer();
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw ImageIoError("short write to " + path.string());

  const auto& g = image.grid();
  std::ofstream s(sidecar_path(path));
  if (!s) throw ImageIoError("cannot write " + sidecar_path(path).string());
  s.precision(17);
  s << "# spectral PFM sidecar\n"
    << "width " << image.width() << "\n"
    << "height " << image.height() << "\n"
    << "start_nm " << g.start_nm << "\n"
    << "end_nm " << g.end_nm << "\n"
    << "bins " << g.bin_count << "\n"
    << "layout pixel-major\n"
    << "units W m^-2 sr^-1 nm^-1\n";
}

SpectralImage read_spectral_pfm(const std::filesystem::path& path) {
  std::ifstream s(sidecar_path(path));
  if (!s) throw ImageIoError("missing sidecar " + sidecar_path(path).string());
  int width = -1, height = -1;
  double start = 0, end = 0;
  std::size_t bins = 0;
  std::string line;
  while (std::getline(s, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "width") ls >> width;
    else if (key == "height") ls >> height;
    else if (key == "start_nm") ls >> start;
    else if (key == "end_nm") ls >> end;
    else if (key == "bins") ls >> bins;
  }
  if (width <= 0 || height <= 0) throw ImageIoError("sidecar lacks image size");
  SpectralImage image(width, height, WavelengthGrid::make(start, end, bins));

  std::ifstream f(path, std::ios::binary);
  if (!f) throw ImageIoError("cannot read " + path.string());
  std::string magic, scale;
  std::size_t cols = 0;
  int rows = 0;
  f >> magic >> cols >> rows >> scale;
  f.get();
  if (magic != "Pf" || cols != static_cast<std::size_t>(width) * bins || rows != height) {
    throw ImageIoError(path.string() + ": header does not match sidecar");
  }
  if (std::stod(scale) >= 0) throw ImageIoError(path.string() + ": big-endian PFM not supported");
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (data.size() != cols * static_cast<std::size_t>(rows) * 4) throw ImageIoError(path.string() + ": truncated");
  ByteReader r(data);
  const auto w = static_cast<std::size_t>(width);
  for (int y = height - 1; y >= 0; --y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (double& v : image.pixel(static_cast<std::size_t>(y) * w + x)) v = r.get_f32();
    }
  }
  return image;
}

// ---------------------------------------------------------------------------
// PNG

void write_png(const std::filesystem::path& path, const Rgb8Image& image) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw ImageIoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ImageIoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError("libpng error writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    auto* row = const_cast<png_bytep>(image.pixels.data() + 3 * static_cast<std::size_t>(y) *
                                                                static_cast<std::size_t>(image.width));
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace prism
