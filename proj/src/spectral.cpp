// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/spectral.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace prism {

WavelengthGrid WavelengthGrid::make(double start_nm, double end_nm, std::size_t bin_count) {
  if (!(start_nm < end_nm)) {
    throw std::invalid_argument("wavelength grid: start must be below end");
  }
  if (bin_count < 2) {
    throw std::invalid_argument("wavelength grid: need at least two bins");
  }
  return WavelengthGrid{start_nm, end_nm, bin_count};
}

std::string to_string(const WavelengthGrid& grid) {
  std::ostringstream os;
  os << grid.start_nm << ".." << grid.end_nm << " nm x " << grid.bin_count;
  return os.str();
}

Spectrum::Spectrum(const WavelengthGrid& grid, double value)
    : grid_(grid), samples_(grid.bin_count, value) {}

Spectrum::Spectrum(const WavelengthGrid& grid, std::vector<double> samples)
    : grid_(grid), samples_(std::move(samples)) {
  if (samples_.size() != grid_.bin_count) {
    throw GridMismatch("spectrum sample count " + std::to_string(samples_.size()) +
                       " does not match grid " + to_string(grid_));
  }
}

void Spectrum::require_same_grid(const Spectrum& rhs) const {
  if (!(grid_ == rhs.grid_) || samples_.size() != rhs.samples_.size()) {
    throw GridMismatch("spectra on different grids: " + to_string(grid_) + " vs " +
                       to_string(rhs.grid_));
  }
}

Spectrum& Spectrum::operator+=(const Spectrum& rhs) {
  require_same_grid(rhs);
  for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] += rhs.samples_[i];
  return *this;
}

Spectrum& Spectrum::operator-=(const Spectrum& rhs) {
  require_same_grid(rhs);
  for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] -= rhs.samples_[i];
  return *this;
}

Spectrum& Spectrum::operator*=(const Spectrum& rhs) {
  require_same_grid(rhs);
  for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] *= rhs.samples_[i];
  return *this;
}

Spectrum& Spectrum::operator*=(double s) {
  for (double& v : samples_) v *= s;
  return *this;
}

Spectrum& Spectrum::operator/=(double s) {
  for (double& v : samples_) v /= s;
  return *this;
}

double Spectrum::max_value() const {
  return samples_.empty() ? 0.0 : *std::max_element(samples_.begin(), samples_.end());
}

double Spectrum::min_value() const {
  return samples_.empty() ? 0.0 : *std::min_element(samples_.begin(), samples_.end());
}

double Spectrum::sum() const { return std::accumulate(samples_.begin(), samples_.end(), 0.0); }

double Spectrum::mean() const {
  return samples_.empty() ? 0.0 : sum() / static_cast<double>(samples_.size());
}

bool Spectrum::is_zero() const {
  return std::all_of(samples_.begin(), samples_.end(), [](double v) { return v == 0.0; });
}

double inner_product(const Spectrum& a, const Spectrum& b) {
  if (!(a.grid() == b.grid())) throw GridMismatch("inner_product: grid mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc * a.grid().step();
}

// ---------------------------------------------------------------------------
// Tabulated functions

double SampledFunction::at(double wavelength_nm) const {
  if (wavelengths.empty()) return 0.0;
  if (wavelength_nm <= wavelengths.front()) return values.front();
  if (wavelength_nm >= wavelengths.back()) return values.back();
  auto it = std::upper_bound(wavelengths.begin(), wavelengths.end(), wavelength_nm);
  const std::size_t hi = static_cast<std::size_t>(it - wavelengths.begin());
  const std::size_t lo = hi - 1;
  const double f = (wavelength_nm - wavelengths[lo]) / (wavelengths[hi] - wavelengths[lo]);
  return values[lo] + f * (values[hi] - values[lo]);
}

Spectrum SampledFunction::resample(const WavelengthGrid& grid) const {
  Spectrum s(grid);
  for (std::size_t i = 0; i < grid.bin_count; ++i) s[i] = at(grid.wavelength(i));
  return s;
}

double SampledFunction::integral() const {
  double acc = 0.0;
  for (std::size_t i = 1; i < wavelengths.size(); ++i) {
    acc += 0.5 * (values[i] + values[i - 1]) * (wavelengths[i] - wavelengths[i - 1]);
  }
  return acc;
}

std::vector<std::vector<double>> read_columns(const std::filesystem::path& path,
                                              std::size_t min_columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open table '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> row;
    std::string token;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": not a number: '" + token + "'");
      }
    }
    if (row.empty()) continue;
    if (row.size() < min_columns) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(min_columns) + " columns, got " +
                               std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

SampledFunction read_two_column(const std::filesystem::path& path) {
  SampledFunction f;
  for (const auto& row : read_columns(path, 2)) {
    if (!f.wavelengths.empty() && row[0] <= f.wavelengths.back()) {
      throw std::runtime_error(path.string() + ": wavelengths must be strictly increasing");
    }
    f.wavelengths.push_back(row[0]);
    f.values.push_back(row[1]);
  }
  if (f.wavelengths.size() < 2) {
    throw std::runtime_error(path.string() + ": need at least two samples");
  }
  return f;
}

// ---------------------------------------------------------------------------
// Colorimetry

namespace {

// IEC 61966-2-1 linear sRGB -> XYZ (D65 white).
constexpr std::array<double, 9> kRgbToXyz = {
    0.4124, 0.3576, 0.1805,
    0.2126, 0.7152, 0.0722,
    0.0193, 0.1192, 0.9505,
};

std::array<double, 9> invert3(const std::array<double, 9>& m) {
  const double a = m[0], b = m[1], c = m[2];
  const double d = m[3], e = m[4], f = m[5];
  const double g = m[6], h = m[7], i = m[8];
  const double co0 = e * i - f * h;
  const double co1 = f * g - d * i;
  const double co2 = d * h - e * g;
  const double det = a * co0 + b * co1 + c * co2;
  if (det == 0.0 || !std::isfinite(det)) throw std::domain_error("singular 3x3 matrix");
  const double inv = 1.0 / det;
  return {co0 * inv, (c * h - b * i) * inv, (b * f - c * e) * inv,
          co1 * inv, (a * i - c * g) * inv, (c * d - a * f) * inv,
          co2 * inv, (b * g - a * h) * inv, (a * e - b * d) * inv};
}

const std::array<double, 9>& xyz_to_rgb_matrix() {
  static const std::array<double, 9> m = invert3(kRgbToXyz);
  return m;
}

std::array<double, 3> mul3(const std::array<double, 9>& m, double x, double y, double z) {
  return {m[0] * x + m[1] * y + m[2] * z, m[3] * x + m[4] * y + m[5] * z,
          m[6] * x + m[7] * y + m[8] * z};
}

}  // namespace

ColorXYZ rgb_to_xyz(const ColorRGB& c) {
  auto v = mul3(kRgbToXyz, c.r, c.g, c.b);
  return {v[0], v[1], v[2]};
}

ColorRGB xyz_to_rgb(const ColorXYZ& c) {
  auto v = mul3(xyz_to_rgb_matrix(), c.x, c.y, c.z);
  return {v[0], v[1], v[2]};
}

std::array<double, 2> chromaticity(const ColorXYZ& c) {
  const double s = c.x + c.y + c.z;
  if (s == 0.0) return {0.0, 0.0};
  return {c.x / s, c.y / s};
}

CmfTable::CmfTable(const WavelengthGrid& grid, const SampledFunction& xbar,
                   const SampledFunction& ybar, const SampledFunction& zbar)
    : grid_(grid), columns_{xbar.resample(grid), ybar.resample(grid), zbar.resample(grid)} {
  finish();
}

CmfTable::CmfTable(const WavelengthGrid& grid, const SampledFunction& xbar,
                   const SampledFunction& ybar, const SampledFunction& zbar,
                   const SampledFunction& illuminant)
    : grid_(grid), columns_{xbar.resample(grid), ybar.resample(grid), zbar.resample(grid)} {
  const Spectrum w = illuminant.resample(grid);
  for (auto& col : columns_) col *= w;
  finish();
}

void CmfTable::finish() {
  const double y_sum = columns_[1].sum();
  if (!(y_sum > 0.0)) throw std::domain_error("CMF table: reference illuminant has zero Y");
  scale_ = 1.0 / y_sum;

  std::array<double, 9> gram{};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < grid_.bin_count; ++i) acc += columns_[r][i] * columns_[c][i];
      gram[r * 3 + c] = acc;
    }
  }
  gram_inverse_ = invert3(gram);
}

CmfTable CmfTable::load(const std::filesystem::path& data_dir, const WavelengthGrid& grid) {
  return CmfTable(grid, read_two_column(data_dir / "cie1931_xbar.txt"),
                  read_two_column(data_dir / "cie1931_ybar.txt"),
                  read_two_column(data_dir / "cie1931_zbar.txt"));
}

CmfTable CmfTable::load(const std::filesystem::path& data_dir, const WavelengthGrid& grid,
                        const std::filesystem::path& illuminant_file) {
  return CmfTable(grid, read_two_column(data_dir / "cie1931_xbar.txt"),
                  read_two_column(data_dir / "cie1931_ybar.txt"),
                  read_two_column(data_dir / "cie1931_zbar.txt"),
                  read_two_column(illuminant_file));
}

namespace {

std::array<double, 3> project_coefficients(const Spectrum& s, const CmfTable& cmf) {
  if (!(s.grid() == cmf.grid())) {
    throw GridMismatch("spectrum grid " + to_string(s.grid()) + " differs from CMF grid " +
                       to_string(cmf.grid()));
  }
  std::array<double, 3> at_s{};
  for (std::size_t j = 0; j < 3; ++j) {
    const Spectrum& col = cmf.column(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += col[i] * s[i];
    at_s[j] = acc;
  }
  return at_s;
}

Spectrum combine_columns(const CmfTable& cmf, const std::array<double, 3>& w) {
  Spectrum out(cmf.grid());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = cmf.column(0)[i] * w[0] + cmf.column(1)[i] * w[1] + cmf.column(2)[i] * w[2];
  }
  return out;
}

}  // namespace

ColorXYZ spectrum_to_xyz(const Spectrum& s, const CmfTable& cmf) {
  const auto at_s = project_coefficients(s, cmf);
  return {at_s[0] * cmf.scale(), at_s[1] * cmf.scale(), at_s[2] * cmf.scale()};
}

Spectrum rgb_to_spectrum(const ColorRGB& c, const CmfTable& cmf) {
  const ColorXYZ xyz = rgb_to_xyz(c);
  // s = A w with scale * A^T A w = xyz.
  auto w = mul3(cmf.gram_inverse(), xyz.x, xyz.y, xyz.z);
  for (double& v : w) v /= cmf.scale();
  return combine_columns(cmf, w);
}

Spectrum fundamental_metamer(const Spectrum& s, const CmfTable& cmf) {
  const auto at_s = project_coefficients(s, cmf);
  const auto w = mul3(cmf.gram_inverse(), at_s[0], at_s[1], at_s[2]);
  return combine_columns(cmf, w);
}

Spectrum metameric_black(const Spectrum& s, const CmfTable& cmf) {
  return s - fundamental_metamer(s, cmf);
}

Spectrum clip_spectrum(const Spectrum& s, double lo, double hi, ClipCounter* counter) {
  Spectrum out = s;
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = std::clamp(out[i], lo, hi);
    if (v != out[i]) ++clipped;
    out[i] = v;
  }
  if (counter != nullptr && clipped > 0) {
    counter->clipped_bins += clipped;
    ++counter->clipped_spectra;
  }
  return out;
}

}  // namespace prism
