#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nlse/error.hpp"
#include "nlse/fft.hpp"
#include "nlse/field.hpp"

namespace nlse {

/// Knobs outside the physical parameters. Defaults reproduce the
/// propagation equation as written: saturation acts on the Kerr index only.
struct SolverOptions {
  /// Also damp absorption by 1 / (1 + I / I_sat).
  bool saturate_absorption = false;
  /// Sign of the diffraction phase. Anything but +1 is a fault-injection
  /// hook used by the self-test to prove the diffraction check is sensitive.
  double kinetic_sign = 1.0;
};

namespace detail {

inline void require_finite(const ComplexField& field) {
  if (!field.all_finite())
    throw InvalidArgument("field contains non-finite samples");
}

/// exp(-i sign (kx^2 + ky^2) dz / (2 k0)) * scale on the FFT-ordered grid.
inline std::vector<Complex> diffraction_kernel(const TransverseGrid& grid,
                                               double k0, double dz,
                                               double sign, double scale) {
  std::vector<double> kx2(grid.nx());
  for (std::size_t i = 0; i < grid.nx(); ++i) kx2[i] = grid.kx(i) * grid.kx(i);
  std::vector<Complex> kernel(grid.size());
  const double factor = -sign * dz / (2.0 * k0);
  for (std::size_t j = 0; j < grid.ny(); ++j) {
    const double ky2 = grid.ky(j) * grid.ky(j);
    Complex* row = kernel.data() + j * grid.nx();
    for (std::size_t i = 0; i < grid.nx(); ++i)
      row[i] = std::polar(scale, factor * (kx2[i] + ky2));
  }
  return kernel;
}

/// Integral of I/(1 + I/I_sat) over a step of length dz for a sample that
/// starts at intensity i0 and decays as i0 exp(-alpha z), in closed form.
class SaturatedIntensityIntegral {
 public:
  SaturatedIntensityIntegral(double i_sat, double alpha, double dz)
      : inv_isat_(1.0 / i_sat),
        dz_(dz),
        decay_(std::exp(-alpha * dz)),
        lost_(-std::expm1(-alpha * dz)),
        scale_(alpha == 0.0 ? 0.0 : i_sat / alpha) {}

  double operator()(double i0) const noexcept {
    const double s0 = i0 * inv_isat_;
    if (scale_ == 0.0) return i0 / (1.0 + s0) * dz_;
    return scale_ * std::log1p(s0 * lost_ / (1.0 + s0 * decay_));
  }

 private:
  double inv_isat_, dz_, decay_, lost_, scale_;
};

/// Applies the pointwise Kerr + absorption sub-flow in place and returns
/// the resulting power sum (without the cell area).
///
/// With unsaturated absorption the sub-flow is integrated exactly: the
/// amplitude decays by exp(-alpha dz / 2) and the Kerr phase integrates the
/// saturated intensity along that decay. For alpha = 0 this is the plain
/// exp(i k0 (n2/n0) I/(1 + I/I_sat) dz) factor. Saturated absorption uses
/// the midpoint intensity.
inline double apply_nonlinear(std::span<Complex> values, double k0,
                              const MediumParams& medium, double dz,
                              const SolverOptions& options) {
  const double kerr = k0 * medium.n2 / medium.n0;
  const double inv_isat = 1.0 / medium.i_sat;
  const double damping = std::exp(-0.5 * medium.alpha * dz);
  double power = 0.0;
  if (!options.saturate_absorption) {
    const SaturatedIntensityIntegral integral(medium.i_sat, medium.alpha, dz);
    for (auto& v : values) {
      const double phase = kerr * integral(std::norm(v));
      v *= std::polar(damping, phase);
      power += std::norm(v);
    }
    return power;
  }
  for (auto& v : values) {
    const double i0 = std::norm(v);
    const double i_mid = i0 * std::exp(-0.5 * medium.alpha * dz / (1.0 + i0 * inv_isat));
    const double saturation = 1.0 / (1.0 + i_mid * inv_isat);
    v *= std::polar(std::exp(-0.5 * medium.alpha * saturation * dz),
                    kerr * i_mid * saturation * dz);
    power += std::norm(v);
  }
  return power;
}

}  // namespace detail

/// Exact free-space (diffraction) step of length dz; unitary.
inline ComplexField step_linear(const ComplexField& field,
                                const BeamParams& beam, double dz,
                                const SolverOptions& options = {}) {
  beam.validate();
  if (!std::isfinite(dz)) throw InvalidArgument("dz must be finite");
  detail::require_finite(field);

  const auto& grid = field.grid();
  const auto kernel =
      detail::diffraction_kernel(grid, beam.k0(), dz, options.kinetic_sign, 1.0);
  ComplexField out = field;
  Fft2d fft(grid.nx(), grid.ny());
  fft.forward(out.values());
  auto values = out.values();
  for (std::size_t n = 0; n < values.size(); ++n) values[n] *= kernel[n];
  fft.backward(out.values());
  return out;
}

/// Pointwise saturable Kerr phase and linear absorption over dz. For
/// alpha = 0 this is psi *= exp(i k0 (n2/n0) I/(1 + I/I_sat) dz); with
/// absorption the phase follows the decaying intensity within the step.
inline ComplexField step_nonlinear(const ComplexField& field,
                                   const BeamParams& beam,
                                   const MediumParams& medium, double dz,
                                   const SolverOptions& options = {}) {
  beam.validate();
  medium.validate();
  if (!(dz > 0.0) || !std::isfinite(dz))
    throw InvalidArgument("nonlinear step dz must be positive");
  detail::require_finite(field);

  ComplexField out = field;
  detail::apply_nonlinear(out.values(), beam.k0(), medium, dz, options);
  return out;
}

/// Minimum number of samples across the beam diameter accepted by propagate.
inline constexpr double kMinSamplesAcrossBeam = 16.0;

/// Symmetric (Strang) split-step integration over cfg.length:
/// each step is half diffraction, full nonlinear, half diffraction.
/// Adjacent half steps are fused into one spectral multiply.
inline ComplexField propagate(const ComplexField& field, const BeamParams& beam,
                              const MediumParams& medium,
                              const PropagationConfig& cfg,
                              const SolverOptions& options = {}) {
  beam.validate();
  medium.validate();
  cfg.validate();
  detail::require_finite(field);

  const auto& grid = field.grid();
  if (2.0 * beam.waist < kMinSamplesAcrossBeam * std::max(grid.dx(), grid.dy()))
    throw InvalidArgument("grid does not resolve the beam: need at least 16 "
                          "samples across the beam diameter");

  const double dz = cfg.dz();
  const double k0 = beam.k0();
  const double inv_n = 1.0 / static_cast<double>(grid.size());
  const auto half =
      detail::diffraction_kernel(grid, k0, 0.5 * dz, options.kinetic_sign, inv_n);
  const auto full =
      cfg.n_steps > 1
          ? detail::diffraction_kernel(grid, k0, dz, options.kinetic_sign, inv_n)
          : std::vector<Complex>{};

  Fft2d fft(grid.nx(), grid.ny());
  detail::AlignedBuffer buf(grid.size());
  std::copy(field.values().begin(), field.values().end(), buf.data());
  auto values = buf.span();
  auto multiply = [&](const std::vector<Complex>& kernel) {
    for (std::size_t n = 0; n < values.size(); ++n) values[n] *= kernel[n];
  };

  fft.forward_raw(buf);
  multiply(half);
  for (std::size_t step = 0; step < cfg.n_steps; ++step) {
    fft.backward_raw(buf);
    const double power = detail::apply_nonlinear(values, k0, medium, dz, options);
    if (!std::isfinite(power))
      throw BlowUp(step, "non-finite field at propagation step " +
                             std::to_string(step));
    fft.forward_raw(buf);
    multiply(step + 1 == cfg.n_steps ? half : full);
  }
  fft.backward_raw(buf);

  return ComplexField(grid, std::vector<Complex>(buf.data(), buf.data() + buf.size()));
}

}  // namespace nlse
