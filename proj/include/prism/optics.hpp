// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <complex>
#include <filesystem>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "prism/geometry.hpp"
#include "prism/spectral.hpp"

namespace prism {

/// Complex index of refraction n(l) + i k(l).
struct ComplexIor {
  Spectrum n;
  Spectrum k;

  /// Throws std::invalid_argument unless n > 0 and k >= 0 everywhere.
  static ComplexIor make(Spectrum n, Spectrum k);
  static ComplexIor constant(const WavelengthGrid& grid, double n, double k = 0.0);
  /// Reads a (wavelength_nm, n, k) table and resamples it onto `grid`.
  static ComplexIor load(const std::filesystem::path& path, const WavelengthGrid& grid);

  /// Real index at `wavelength_nm`, linearly interpolated between bins.
  double real_at(double wavelength_nm) const;
  bool absorbing() const { return k.max_value() > 0.0; }
};

/// Absorption index k / n.
Spectrum kappa(const ComplexIor& ior);

/// Squared s- and p-polarised amplitude reflection coefficients.
struct PolarizedReflectance {
  double rs2 = 0;
  double rp2 = 0;
  double unpolarized() const { return 0.5 * (rs2 + rp2); }
};

/// Light in medium `n_from` meeting medium `n_to` at incidence cosine `cos_theta_i`.
PolarizedReflectance fresnel_polarized(double cos_theta_i, std::complex<double> n_from,
                                       std::complex<double> n_to);

struct FresnelTerms {
  Spectrum reflectance;
  Spectrum transmittance;
};

/// Unpolarised R and T = 1 - R per wavelength, light travelling from
/// `ior_out` into `ior_in`. Total internal reflection gives R = 1 exactly.
FresnelTerms fresnel(double cos_theta_i, const ComplexIor& ior_out, const ComplexIor& ior_in);

/// Mirror direction of `w` (propagation direction) about `n`.
Vec3 reflect(const Vec3& w, const Vec3& n);

/// Snell refraction of propagation direction `w` through a surface with
/// normal `n` (either orientation). `eta_ratio` = n_incident / n_transmitted.
/// Empty on total internal reflection.
std::optional<Vec3> refract(const Vec3& w, const Vec3& n, double eta_ratio);

/// Directions for BRDF evaluation. wi points toward the light, wo toward the
/// viewer, both away from the surface.
struct Directions {
  Vec3 wi;
  Vec3 wo;
  Vec3 normal;
};

struct Lambertian {
  Spectrum reflectance;
};

struct FresnelDielectric {
  ComplexIor ior;
  ComplexIor exterior_ior;
};

/// Measured BRDF on a regular (theta_i, theta_o, delta_phi) grid, angles in
/// radians, one Spectrum per node, trilinear interpolation between nodes.
class TabulatedBrdf {
 public:
  TabulatedBrdf(std::vector<double> theta_i, std::vector<double> theta_o,
                std::vector<double> delta_phi, std::vector<Spectrum> values);

  /// Text format: see docs/formats.md. Spectra are resampled onto `grid`.
  static TabulatedBrdf load(const std::filesystem::path& path, const WavelengthGrid& grid);
  static TabulatedBrdf constant(const Spectrum& value);

  Spectrum eval(double theta_i, double theta_o, double delta_phi) const;
  Spectrum eval(const Directions& d) const;

  /// Queries that fell outside the tabulated range and were clamped.
  std::size_t clamped_queries() const { return clamp_count_->load(); }
  /// Mean of all node values; used as an albedo proxy by photon tracing.
  double mean_value() const;

  const std::vector<double>& theta_i() const { return theta_i_; }
  const std::vector<double>& theta_o() const { return theta_o_; }
  const std::vector<double>& delta_phi() const { return delta_phi_; }
  const std::vector<Spectrum>& values() const { return values_; }

 private:
  const Spectrum& at(std::size_t i, std::size_t o, std::size_t p) const {
    return values_[(i * theta_o_.size() + o) * delta_phi_.size() + p];
  }

  std::vector<double> theta_i_, theta_o_, delta_phi_;
  std::vector<Spectrum> values_;
  std::shared_ptr<std::atomic<std::size_t>> clamp_count_ =
      std::make_shared<std::atomic<std::size_t>>(0);
};

using Material = std::variant<Lambertian, FresnelDielectric, TabulatedBrdf>;

/// True for materials handled by shadow-ray shading (non-delta lobes).
bool is_diffuse(const Material& m);

/// F_r(wi, wo) in 1/sr. Specular dielectrics have no finite BRDF and return zero.
Spectrum eval_brdf(const Material& m, const Directions& d);

/// Zenith angle of `w` relative to `n`, clamped to [0, pi].
double zenith(const Vec3& w, const Vec3& n);

}  // namespace prism
