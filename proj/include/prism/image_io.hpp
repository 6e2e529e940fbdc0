// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "prism/render_local.hpp"
#include "prism/spectral.hpp"

namespace prism {

enum class Transfer { srgb, power };

struct ToneMapSettings {
  /// Multiplies linear RGB before the transfer curve. Must be > 0.
  double exposure = 1.0;
  Transfer transfer = Transfer::srgb;
  /// Used with Transfer::power: v -> v^(1/gamma).
  double gamma = 2.2;
};

/// 8-bit RGB, row-major, row 0 at the top.
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 bytes per pixel

  std::array<std::uint8_t, 3> at(int x, int y) const {
    const auto i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                        static_cast<std::size_t>(x));
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
};

double srgb_encode(double linear);

/// spectrum -> XYZ (with `cmf`) -> linear sRGB -> exposure -> transfer -> [0, 255].
/// Throws std::invalid_argument for a non-positive exposure.
Rgb8Image tone_map(const SpectralImage& image, const CmfTable& cmf, const ToneMapSettings& settings);

/// Exposure mapping the 99th percentile of positive luminance to 1; 1 for a black image.
double auto_exposure(const SpectralImage& image, const CmfTable& cmf);

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Spectral image as a greyscale PFM ("Pf") of (width * bins) x height
/// little-endian float32 samples; bins of one pixel are adjacent. Rows run
/// bottom to top as PFM requires. The wavelength grid goes to a text sidecar
/// at `sidecar_path(path)`.
void write_spectral_pfm(const std::filesystem::path& path, const SpectralImage& image);
SpectralImage read_spectral_pfm(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& pfm_path);

void write_png(const std::filesystem::path& path, const Rgb8Image& image);

}  // namespace prism
