// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prism {

/// Raised when two spectral quantities that must share a wavelength grid do not.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Regular wavelength sampling: bin i sits at start + i * step.
struct WavelengthGrid {
  double start_nm = 380.0;
  double end_nm = 780.0;
  std::size_t bin_count = 81;

  /// Throws std::invalid_argument unless start < end and bin_count >= 2.
  static WavelengthGrid make(double start_nm, double end_nm, std::size_t bin_count);

  double step() const { return (end_nm - start_nm) / static_cast<double>(bin_count - 1); }
  double wavelength(std::size_t i) const { return start_nm + step() * static_cast<double>(i); }

  friend bool operator==(const WavelengthGrid&, const WavelengthGrid&) = default;
};

std::string to_string(const WavelengthGrid& grid);

/// Dense radiometric samples on a WavelengthGrid. Units depend on context
/// (radiance, reflectance, power); arithmetic is bin-aligned and checks grids.
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(const WavelengthGrid& grid, double value = 0.0);
  Spectrum(const WavelengthGrid& grid, std::vector<double> samples);

  const WavelengthGrid& grid() const { return grid_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  double operator[](std::size_t i) const { return samples_[i]; }
  double& operator[](std::size_t i) { return samples_[i]; }
  std::span<const double> samples() const { return samples_; }
  std::span<double> samples() { return samples_; }

  Spectrum& operator+=(const Spectrum& rhs);
  Spectrum& operator-=(const Spectrum& rhs);
  Spectrum& operator*=(const Spectrum& rhs);
  Spectrum& operator*=(double s);
  Spectrum& operator/=(double s);

  friend Spectrum operator+(Spectrum lhs, const Spectrum& rhs) { return lhs += rhs; }
  friend Spectrum operator-(Spectrum lhs, const Spectrum& rhs) { return lhs -= rhs; }
  friend Spectrum operator*(Spectrum lhs, const Spectrum& rhs) { return lhs *= rhs; }
  friend Spectrum operator*(Spectrum lhs, double s) { return lhs *= s; }
  friend Spectrum operator*(double s, Spectrum rhs) { return rhs *= s; }
  friend Spectrum operator/(Spectrum lhs, double s) { return lhs /= s; }

  double max_value() const;
  double min_value() const;
  double mean() const;
  double sum() const;
  bool is_zero() const;

  /// Exact sample-wise equality (same grid, same bits up to IEEE ==).
  friend bool operator==(const Spectrum& a, const Spectrum& b) {
    return a.grid_ == b.grid_ && a.samples_ == b.samples_;
  }

 private:
  void require_same_grid(const Spectrum& rhs) const;

  WavelengthGrid grid_{};
  std::vector<double> samples_;
};

/// Grid inner product: sum_i a_i b_i * step.
double inner_product(const Spectrum& a, const Spectrum& b);

/// Two-column (wavelength_nm, value) table, sorted by wavelength.
struct SampledFunction {
  std::vector<double> wavelengths;
  std::vector<double> values;

  /// Piecewise-linear interpolation; constant extrapolation outside the range.
  double at(double wavelength_nm) const;
  Spectrum resample(const WavelengthGrid& grid) const;
  /// Trapezoidal integral over the tabulated range.
  double integral() const;
};

/// Parses whitespace-separated columns; '#' starts a comment. Throws
/// std::runtime_error naming the path and line on malformed input.
std::vector<std::vector<double>> read_columns(const std::filesystem::path& path,
                                              std::size_t min_columns);
SampledFunction read_two_column(const std::filesystem::path& path);

struct ColorXYZ {
  double x = 0, y = 0, z = 0;
};

/// Linear (pre-transfer) sRGB.
struct ColorRGB {
  double r = 0, g = 0, b = 0;
};

ColorRGB xyz_to_rgb(const ColorXYZ& c);
ColorXYZ rgb_to_xyz(const ColorRGB& c);

/// Chromaticity (x, y) of a tristimulus value.
std::array<double, 2> chromaticity(const ColorXYZ& c);

/// CIE 1931 2-degree colour matching functions on a render grid, weighted by
/// a reference illuminant. The columns of A are W(l) * {xbar, ybar, zbar}(l);
/// XYZ of a spectrum s is k * A^T s * step with k chosen so the illuminant
/// itself has Y = 1.
class CmfTable {
 public:
  /// Equal-energy reference (W = 1).
  CmfTable(const WavelengthGrid& grid, const SampledFunction& xbar,
           const SampledFunction& ybar, const SampledFunction& zbar);
  CmfTable(const WavelengthGrid& grid, const SampledFunction& xbar,
           const SampledFunction& ybar, const SampledFunction& zbar,
           const SampledFunction& illuminant);

  /// Loads cie1931_{x,y,z}bar.txt (and optionally an illuminant file) from a directory.
  static CmfTable load(const std::filesystem::path& data_dir, const WavelengthGrid& grid);
  static CmfTable load(const std::filesystem::path& data_dir, const WavelengthGrid& grid,
                       const std::filesystem::path& illuminant_file);

  const WavelengthGrid& grid() const { return grid_; }
  /// Column j of A (j = 0, 1, 2 for x, y, z).
  const Spectrum& column(std::size_t j) const { return columns_[j]; }
  /// Combined scale k * step applied to A^T s.
  double scale() const { return scale_; }
  /// (A^T A)^-1, row-major.
  const std::array<double, 9>& gram_inverse() const { return gram_inverse_; }

 private:
  void finish();

  WavelengthGrid grid_;
  std::array<Spectrum, 3> columns_;
  double scale_ = 1.0;
  std::array<double, 9> gram_inverse_{};
};

ColorXYZ spectrum_to_xyz(const Spectrum& s, const CmfTable& cmf);

/// Fundamental metamer whose XYZ equals rgb_to_xyz(c) exactly (up to rounding).
/// Negative lobes are kept; see clip_spectrum.
Spectrum rgb_to_spectrum(const ColorRGB& c, const CmfTable& cmf);

/// Orthogonal projection of s onto span(A).
Spectrum fundamental_metamer(const Spectrum& s, const CmfTable& cmf);

/// s minus its fundamental; carries no tristimulus response.
Spectrum metameric_black(const Spectrum& s, const CmfTable& cmf);

/// Counts bins altered by clip_spectrum; shared by concurrent ingestion.
struct ClipCounter {
  std::atomic<std::size_t> clipped_bins{0};
  std::atomic<std::size_t> clipped_spectra{0};
};

/// Clamps every sample into [lo, hi]. This is the only place negative
/// projection lobes are removed.
Spectrum clip_spectrum(const Spectrum& s, double lo, double hi, ClipCounter* counter = nullptr);

}  // namespace prism
