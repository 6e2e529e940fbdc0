// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/optics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace prism {

ComplexIor ComplexIor::make(Spectrum n, Spectrum k) {
  if (!(n.grid() == k.grid())) throw GridMismatch("complex IOR: n and k on different grids");
  if (!(n.min_value() > 0.0)) throw std::invalid_argument("complex IOR: n must be positive");
  if (k.min_value() < 0.0) throw std::invalid_argument("complex IOR: k must be non-negative");
  return ComplexIor{std::move(n), std::move(k)};
}

ComplexIor ComplexIor::constant(const WavelengthGrid& grid, double n, double k) {
  return make(Spectrum(grid, n), Spectrum(grid, k));
}

ComplexIor ComplexIor::load(const std::filesystem::path& path, const WavelengthGrid& grid) {
  SampledFunction n, k;
  for (const auto& row : read_columns(path, 3)) {
    if (!n.wavelengths.empty() && row[0] <= n.wavelengths.back()) {
      throw std::runtime_error(path.string() + ": wavelengths must be strictly increasing");
    }
    n.wavelengths.push_back(row[0]);
    n.values.push_back(row[1]);
    k.wavelengths.push_back(row[0]);
    k.values.push_back(row[2]);
  }
  if (n.wavelengths.empty()) throw std::runtime_error(path.string() + ": empty IOR table");
  try {
    return make(n.resample(grid), k.resample(grid));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

double ComplexIor::real_at(double wavelength_nm) const {
  const WavelengthGrid& g = n.grid();
  const double x = (wavelength_nm - g.start_nm) / g.step();
  if (x <= 0.0) return n[0];
  if (x >= static_cast<double>(g.bin_count - 1)) return n[g.bin_count - 1];
  const auto lo = static_cast<std::size_t>(x);
  const double f = x - static_cast<double>(lo);
  return n[lo] + f * (n[lo + 1] - n[lo]);
}

Spectrum kappa(const ComplexIor& ior) {
  Spectrum out = ior.k;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ior.k[i] / ior.n[i];
  return out;
}

PolarizedReflectance fresnel_polarized(double cos_theta_i, std::complex<double> n_from,
                                       std::complex<double> n_to) {
  using C = std::complex<double>;
  const double cos_i = std::clamp(cos_theta_i, 0.0, 1.0);
  const double sin2_i = std::max(0.0, 1.0 - cos_i * cos_i);
  const C eta = n_from / n_to;
  const C sin2_t = eta * eta * sin2_i;

  if (n_from.imag() == 0.0 && n_to.imag() == 0.0 && sin2_t.real() >= 1.0) {
    return {1.0, 1.0};  // total internal reflection
  }

  const C cos_t = std::sqrt(C(1.0) - sin2_t);
  const C rs = (n_from * cos_i - n_to * cos_t) / (n_from * cos_i + n_to * cos_t);
  const C rp = (n_to * cos_i - n_from * cos_t) / (n_to * cos_i + n_from * cos_t);
  return {std::norm(rs), std::norm(rp)};
}

FresnelTerms fresnel(double cos_theta_i, const ComplexIor& ior_out, const ComplexIor& ior_in) {
  if (!(ior_out.n.grid() == ior_in.n.grid())) throw GridMismatch("fresnel: IOR grids differ");
  FresnelTerms out{Spectrum(ior_out.n.grid()), Spectrum(ior_out.n.grid())};
  for (std::size_t i = 0; i < out.reflectance.size(); ++i) {
    const auto pr = fresnel_polarized(cos_theta_i, {ior_out.n[i], ior_out.k[i]},
                                      {ior_in.n[i], ior_in.k[i]});
    const double r = std::min(1.0, pr.unpolarized());
    out.reflectance[i] = r;
    out.transmittance[i] = 1.0 - r;
  }
  return out;
}

Vec3 reflect(const Vec3& w, const Vec3& n) { return w - n * (2.0 * dot(w, n)); }

std::optional<Vec3> refract(const Vec3& w, const Vec3& n, double eta_ratio) {
  Vec3 facing = dot(w, n) > 0.0 ? -n : n;
  const double cos_i = -dot(w, facing);
  const double sin2_t = eta_ratio * eta_ratio * std::max(0.0, 1.0 - cos_i * cos_i);
  if (sin2_t > 1.0) return std::nullopt;
  const double cos_t = std::sqrt(1.0 - sin2_t);
  return normalize(w * eta_ratio + facing * (eta_ratio * cos_i - cos_t));
}

double zenith(const Vec3& w, const Vec3& n) { return std::acos(std::clamp(dot(w, n), -1.0, 1.0)); }

// ---------------------------------------------------------------------------
// Tabulated BRDF

namespace {

struct AxisWeight {
  std::size_t i0 = 0, i1 = 0;
  double f = 0.0;
  bool clamped = false;
};

AxisWeight locate(const std::vector<double>& axis, double x) {
  AxisWeight w;
  if (axis.size() == 1) {
    w.clamped = x != axis.front();
    return w;
  }
  const double tol = 1e-12;
  if (x < axis.front()) {
    w.clamped = x < axis.front() - tol;
    return w;
  }
  if (x > axis.back()) {
    w.i0 = w.i1 = axis.size() - 1;
    w.clamped = x > axis.back() + tol;
    return w;
  }
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - axis.begin());
  if (hi >= axis.size()) hi = axis.size() - 1;
  w.i0 = hi - 1;
  w.i1 = hi;
  w.f = (x - axis[w.i0]) / (axis[w.i1] - axis[w.i0]);
  return w;
}

void require_axis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) throw std::invalid_argument(std::string("BRDF table: empty axis ") + name);
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) {
      throw std::invalid_argument(std::string("BRDF table: axis not increasing: ") + name);
    }
  }
}

}  // namespace

TabulatedBrdf::TabulatedBrdf(std::vector<double> theta_i, std::vector<double> theta_o,
                             std::vector<double> delta_phi, std::vector<Spectrum> values)
    : theta_i_(std::move(theta_i)),
      theta_o_(std::move(theta_o)),
      delta_phi_(std::move(delta_phi)),
      values_(std::move(values)) {
  require_axis(theta_i_, "theta_i");
  require_axis(theta_o_, "theta_o");
  require_axis(delta_phi_, "delta_phi");
  if (values_.size() != theta_i_.size() * theta_o_.size() * delta_phi_.size()) {
    throw std::invalid_argument("BRDF table: value count does not match grid dimensions");
  }
  for (const auto& v : values_) {
    if (!(v.grid() == values_.front().grid())) throw GridMismatch("BRDF table: mixed grids");
    if (v.min_value() < 0.0) throw std::invalid_argument("BRDF table: negative value");
  }
}

TabulatedBrdf TabulatedBrdf::constant(const Spectrum& value) {
  return TabulatedBrdf({0.0, std::numbers::pi / 2}, {0.0, std::numbers::pi / 2},
                       {0.0, std::numbers::pi}, std::vector<Spectrum>(8, value));
}

TabulatedBrdf TabulatedBrdf::load(const std::filesystem::path& path, const WavelengthGrid& grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open BRDF table '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::size_t dims[3] = {0, 0, 0};
  std::optional<WavelengthGrid> file_grid;
  std::map<std::tuple<double, double, double>, Spectrum> cells;
  const auto fail = [&](const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string head;
    if (!(fields >> head)) continue;
    if (!file_grid) {
      if (head != "brdf") fail("expected header 'brdf n_theta_i n_theta_o n_delta_phi start end bins'");
      double start = 0, end = 0;
      std::size_t bins = 0;
      if (!(fields >> dims[0] >> dims[1] >> dims[2] >> start >> end >> bins)) fail("bad header");
      try {
        file_grid = WavelengthGrid::make(start, end, bins);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      continue;
    }
    std::vector<double> row;
    try {
      row.push_back(std::stod(head));
      double v;
      while (fields >> v) row.push_back(v);
      if (!fields.eof()) fail("not a number");
    } catch (const std::invalid_argument&) {
      fail("not a number: '" + head + "'");
    }
    if (row.size() != 3 + file_grid->bin_count) {
      fail("expected " + std::to_string(3 + file_grid->bin_count) + " columns");
    }
    SampledFunction f;
    for (std::size_t b = 0; b < file_grid->bin_count; ++b) {
      f.wavelengths.push_back(file_grid->wavelength(b));
      f.values.push_back(row[3 + b]);
    }
    constexpr double deg = std::numbers::pi / 180.0;
    auto key = std::make_tuple(row[0] * deg, row[1] * deg, row[2] * deg);
    if (!cells.emplace(key, f.resample(grid)).second) fail("duplicate angular node");
  }
  if (!file_grid) throw std::runtime_error(path.string() + ": missing 'brdf' header");

  std::vector<double> axes[3];
  for (const auto& [key, _] : cells) {
    axes[0].push_back(std::get<0>(key));
    axes[1].push_back(std::get<1>(key));
    axes[2].push_back(std::get<2>(key));
  }
  for (auto& a : axes) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  for (int a = 0; a < 3; ++a) {
    if (axes[a].size() != dims[a]) {
      throw std::runtime_error(path.string() + ": header declares " + std::to_string(dims[a]) +
                               " nodes on axis " + std::to_string(a) + ", rows contain " +
                               std::to_string(axes[a].size()));
    }
  }
  std::vector<Spectrum> values;
  values.reserve(cells.size());
  for (double ti : axes[0]) {
    for (double to : axes[1]) {
      for (double dp : axes[2]) {
        auto it = cells.find({ti, to, dp});
        if (it == cells.end()) throw std::runtime_error(path.string() + ": incomplete angular grid");
        values.push_back(it->second);
      }
    }
  }
  try {
    return TabulatedBrdf(axes[0], axes[1], axes[2], std::move(values));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

Spectrum TabulatedBrdf::eval(double theta_i, double theta_o, double delta_phi) const {
  const AxisWeight wi = locate(theta_i_, theta_i);
  const AxisWeight wo = locate(theta_o_, theta_o);
  const AxisWeight wp = locate(delta_phi_, delta_phi);
  if (wi.clamped || wo.clamped || wp.clamped) ++*clamp_count_;

  Spectrum out(values_.front().grid());
  const std::size_t is[2] = {wi.i0, wi.i1};
  const std::size_t os[2] = {wo.i0, wo.i1};
  const std::size_t ps[2] = {wp.i0, wp.i1};
  for (int a = 0; a < 2; ++a) {
    const double fa = a ? wi.f : 1.0 - wi.f;
    if (fa == 0.0) continue;
    for (int b = 0; b < 2; ++b) {
      const double fb = b ? wo.f : 1.0 - wo.f;
      if (fb == 0.0) continue;
      for (int c = 0; c < 2; ++c) {
        const double fc = c ? wp.f : 1.0 - wp.f;
        if (fc == 0.0) continue;
        const Spectrum& v = at(is[a], os[b], ps[c]);
        const double w = fa * fb * fc;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * v[k];
      }
    }
  }
  return out;
}

Spectrum TabulatedBrdf::eval(const Directions& d) const {
  const double ti = zenith(d.wi, d.normal);
  const double to = zenith(d.wo, d.normal);
  const Vec3 pi = d.wi - d.normal * dot(d.wi, d.normal);
  const Vec3 po = d.wo - d.normal * dot(d.wo, d.normal);
  const double li = length(pi), lo = length(po);
  double dphi = 0.0;
  if (li > 1e-12 && lo > 1e-12) {
    dphi = std::acos(std::clamp(dot(pi, po) / (li * lo), -1.0, 1.0));
  }
  return eval(ti, to, dphi);
}

double TabulatedBrdf::mean_value() const {
  double acc = 0.0;
  for (const auto& v : values_) acc += v.mean();
  return acc / static_cast<double>(values_.size());
}

// ---------------------------------------------------------------------------

bool is_diffuse(const Material& m) { return !std::holds_alternative<FresnelDielectric>(m); }

Spectrum eval_brdf(const Material& m, const Directions& d) {
  return std::visit(
      [&](const auto& mat) -> Spectrum {
        using T = std::decay_t<decltype(mat)>;
        if constexpr (std::is_same_v<T, Lambertian>) {
          return mat.reflectance * std::numbers::inv_pi;
        } else if constexpr (std::is_same_v<T, TabulatedBrdf>) {
          return mat.eval(d);
        } else {
          return Spectrum(mat.ior.n.grid());
        }
      },
      m);
}

}  // namespace prism
