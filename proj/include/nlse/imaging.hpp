#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nlse/error.hpp"
#include "nlse/field.hpp"
#include "nlse/rng.hpp"

namespace nlse {

/// Side length of the observation images.
inline constexpr std::size_t kImageSide = 224;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;

/// Maps an angle to the principal interval [-pi, pi).
inline double wrap_phase(double x) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = x - two_pi * std::floor((x + std::numbers::pi) / two_pi);
  if (r >= std::numbers::pi) r -= two_pi;
  if (r < -std::numbers::pi) r += two_pi;
  return r;
}

/// Two-channel camera image: density |psi|^2 (W/m^2) and phase (rad),
/// both row-major kImageSide x kImageSide.
struct Observation {
  std::vector<double> density = std::vector<double>(kImagePixels, 0.0);
  std::vector<double> phase = std::vector<double>(kImagePixels, 0.0);

  double peak_density() const noexcept {
    return *std::max_element(density.begin(), density.end());
  }

  void validate() const {
    if (density.size() != kImagePixels || phase.size() != kImagePixels)
      throw InvalidArgument("observation channels must be 224x224");
    for (std::size_t n = 0; n < kImagePixels; ++n) {
      if (!std::isfinite(density[n]) || density[n] < 0.0)
        throw InvalidArgument("observation density must be finite and >= 0");
      if (!std::isfinite(phase[n]) || phase[n] < -std::numbers::pi ||
          phase[n] >= std::numbers::pi)
        throw InvalidArgument("observation phase must lie in [-pi, pi)");
    }
  }

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct NoiseConfig {
  double photon_budget = 1000.0;     // photons at the noiseless peak pixel
  double gaussian_sigma_rel = 0.01;  // fraction of peak density
  double phase_sigma = 0.01;         // rad
  bool shot_noise = true;
  bool gaussian_noise = true;
  bool phase_noise = true;

  static NoiseConfig disabled() {
    NoiseConfig cfg;
    cfg.shot_noise = cfg.gaussian_noise = cfg.phase_noise = false;
    return cfg;
  }

  bool any_enabled() const noexcept {
    return shot_noise || gaussian_noise || phase_noise;
  }

  void validate() const {
    if (!(photon_budget >= 0.0) || !(gaussian_sigma_rel >= 0.0) ||
        !(phase_sigma >= 0.0))
      throw InvalidArgument("noise magnitudes must be non-negative");
    if (shot_noise && !(photon_budget > 0.0))
      throw InvalidArgument("photon budget must be positive with shot noise");
  }
};

/// Block-averages the complex field by `factor` on each axis.
inline ComplexField downsample_field(const ComplexField& field,
                                     std::size_t factor) {
  const auto coarse = field.grid().coarsened(factor);
  if (factor == 1) return field;

  ComplexField out(coarse);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t jc = 0; jc < coarse.ny(); ++jc)
    for (std::size_t ic = 0; ic < coarse.nx(); ++ic) {
      Complex sum{};
      for (std::size_t dj = 0; dj < factor; ++dj)
        for (std::size_t di = 0; di < factor; ++di)
          sum += field(ic * factor + di, jc * factor + dj);
      out(ic, jc) = sum * inv;
    }
  return out;
}

/// Density and center-referenced wrapped phase of a 224x224 field.
inline Observation measure(const ComplexField& field) {
  const auto& grid = field.grid();
  if (grid.nx() != kImageSide || grid.ny() != kImageSide)
    throw InvalidArgument("measure expects a 224x224 field, got " +
                          std::to_string(grid.nx()) + "x" +
                          std::to_string(grid.ny()));
  const Complex center = field(kImageSide / 2, kImageSide / 2);
  // Zero center amplitude leaves the global phase unreferenced.
  const Complex reference =
      std::abs(center) > 0.0 ? std::conj(center) / std::abs(center) : Complex{1.0};

  Observation obs;
  const auto values = field.values();
  for (std::size_t n = 0; n < kImagePixels; ++n) {
    obs.density[n] = std::norm(values[n]);
    obs.phase[n] = wrap_phase(std::arg(values[n] * reference));
  }
  return obs;
}

/// Shot (Poisson), thermal (Gaussian) and phase noise. The Poisson count
/// is scaled so that the noiseless peak pixel expects `photon_budget`
/// photons.
inline Observation add_noise(const Observation& obs, const NoiseConfig& cfg,
                             RandomStream& rng) {
  cfg.validate();
  Observation out = obs;
  const double peak = obs.peak_density();

  if (peak > 0.0 && (cfg.shot_noise || cfg.gaussian_noise)) {
    const double photons_per_unit = cfg.photon_budget / peak;
    std::normal_distribution<double> thermal(0.0, cfg.gaussian_sigma_rel * peak);
    for (auto& d : out.density) {
      double value = d;
      if (cfg.shot_noise) {
        const double mean = d * photons_per_unit;
        if (mean > 0.0) {
          std::poisson_distribution<long long> shot(mean);
          value = static_cast<double>(shot(rng)) / photons_per_unit;
        }
      }
      if (cfg.gaussian_noise && cfg.gaussian_sigma_rel > 0.0) value += thermal(rng);
      d = std::max(value, 0.0);
    }
  }

  if (cfg.phase_noise && cfg.phase_sigma > 0.0) {
    std::normal_distribution<double> jitter(0.0, cfg.phase_sigma);
    for (auto& p : out.phase) p = wrap_phase(p + jitter(rng));
  }
  return out;
}

}  // namespace nlse
