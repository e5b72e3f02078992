#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "nlse/dataset.hpp"
#include "nlse/field.hpp"
#include "nlse/labels.hpp"
#include "nlse/manifest.hpp"
#include "nlse/regression.hpp"
#include "nlse/solver.hpp"

// Closed-form physics and format checks shared by the `selftest`
// subcommand and the acceptance suite.

namespace nlse::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

inline double l2_distance(const ComplexField& a, const ComplexField& b) {
  double sum = 0.0;
  for (std::size_t n = 0; n < a.values().size(); ++n)
    sum += std::norm(a.values()[n] - b.values()[n]);
  return std::sqrt(sum * a.grid().cell_area());
}

}  // namespace detail

/// Mid-range medium of the default parameter box.
inline MediumParams mid_range_medium() {
  const ParameterRanges ranges;
  const auto phys = denormalize_labels(NormalizedLabels{{0.5, 0.5, 0.5}}, ranges);
  return {phys[kN2], phys[kIsat], phys[kAlpha], 1.0};
}

/// |P_out / P_in - 1| with alpha = 0 must stay below 1e-8.
inline CheckResult power_conservation(const TransverseGrid& grid, std::size_t n_steps,
                                      const SolverOptions& options = {}) {
  const BeamParams beam;
  auto medium = mid_range_medium();
  medium.alpha = 0.0;
  const auto in = gaussian_input(beam, grid);
  const auto out = propagate(in, beam, medium, {0.2, n_steps}, options);
  const double drift = std::abs(out.power() / in.power() - 1.0);
  return {"power conservation (alpha = 0)", drift < 1e-8,
          detail::format("relative drift %.3e over %g steps (limit 1e-8)", drift,
                         static_cast<double>(n_steps))};
}

/// P_out / P_in = exp(-alpha L) within 1e-9 relative for each alpha.
inline CheckResult beer_lambert(const TransverseGrid& grid, std::size_t n_steps,
                                const std::vector<double>& alphas,
                                const SolverOptions& options = {}) {
  const BeamParams beam;
  const double length = 0.2;
  const auto in = gaussian_input(beam, grid);
  double worst = 0.0;
  for (double alpha : alphas) {
    auto medium = mid_range_medium();
    medium.alpha = alpha;
    const auto out = propagate(in, beam, medium, {length, n_steps}, options);
    const double expected = std::exp(-alpha * length);
    worst = std::max(worst, std::abs(out.power() / in.power() / expected - 1.0));
  }
  return {"Beer-Lambert absorption", worst < 1e-9,
          detail::format("worst relative error %.3e vs exp(-alpha L) (limit 1e-9)", worst)};
}

struct DiffractionMeasurement {
  double radius_ratio = 0.0;  // measured w(z_R) / (sqrt(2) w0)
  double curvature_phase = 0.0;  // phase at r = w0 minus phase on axis, rad
};

/// Propagates a 50 um, 780 nm Gaussian by one Rayleigh length in free space
/// on a grid of 16 samples per waist and a 32-waist window.
inline DiffractionMeasurement measure_diffraction(const SolverOptions& options = {}) {
  BeamParams beam;
  beam.power = 1.0;
  beam.waist = 50e-6;
  const std::size_t n = 512;
  const auto grid = TransverseGrid::square(n, 32.0 * beam.waist);
  const double z_r = std::numbers::pi * beam.waist * beam.waist / beam.wavelength;
  const auto out = step_linear(gaussian_input(beam, grid), beam, z_r, options);

  double r2 = 0.0, total = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double x = grid.x(i), y = grid.y(j), d = std::norm(out(i, j));
      r2 += (x * x + y * y) * d;
      total += d;
    }
  const double w = std::sqrt(2.0 * r2 / total);
  // Sample at x = w0: 16 cells right of the center.
  const auto on_axis = out(n / 2, n / 2);
  const auto off_axis = out(n / 2 + 16, n / 2);
  return {w / (std::numbers::sqrt2 * beam.waist), std::arg(off_axis * std::conj(on_axis))};
}

/// Second-moment radius reaches sqrt(2) w0 within 0.5% and the wavefront
/// curvature has the diverging sign: phase(w0) - phase(0) = w0^2 k0/(2 R)
/// = 0.5 rad at z = z_R (R = 2 z_R), checked to 1%.
inline CheckResult diffraction(const SolverOptions& options = {}) {
  const auto m = measure_diffraction(options);
  const bool radius_ok = std::abs(m.radius_ratio - 1.0) < 5e-3;
  const bool curvature_ok = std::abs(m.curvature_phase - 0.5) < 5e-3;
  return {"linear diffraction (Gaussian beam at z_R)", radius_ok && curvature_ok,
          detail::format("w/(sqrt2 w0) = %.5f (tol 0.5%%), wavefront phase at w0 = %.4f rad "
                         "(expected 0.5)",
                         m.radius_ratio, m.curvature_phase)};
}

/// ||u_n - u_2n|| / ||u_2n - u_4n|| for the mid-range medium.
inline double strang_ratio(const TransverseGrid& grid, std::size_t base_steps,
                           const SolverOptions& options = {}) {
  const BeamParams beam;
  const auto medium = mid_range_medium();
  const auto in = gaussian_input(beam, grid);
  const auto a = propagate(in, beam, medium, {0.2, base_steps}, options);
  const auto b = propagate(in, beam, medium, {0.2, 2 * base_steps}, options);
  const auto c = propagate(in, beam, medium, {0.2, 4 * base_steps}, options);
  return detail::l2_distance(a, b) / detail::l2_distance(b, c);
}

inline CheckResult strang_order(const TransverseGrid& grid, std::size_t base_steps,
                                const SolverOptions& options = {}) {
  const double ratio = strang_ratio(grid, base_steps, options);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "self-convergence ratio %.4f for n_steps %zu/%zu/%zu (expected [3.5, 4.5])",
                ratio, base_steps, 2 * base_steps, 4 * base_steps);
  return {"Strang second-order convergence", ratio >= 3.5 && ratio <= 4.5, buf};
}

/// nll at x = mu and at a unit Mahalanobis step, Sigma = I.
inline CheckResult nll_analytic_values() {
  GaussianPrediction identity;
  identity.mean = {0.3, 0.5, 0.7};
  for (std::size_t i = 0; i < 3; ++i) identity.chol[i] = inverse_softplus(1.0 - kCholeskyEpsilon);
  const double at_mean = nll({0.3, 0.5, 0.7}, identity);
  const double unit_step = nll({1.3, 0.5, 0.7}, identity);
  const double e1 = std::abs(at_mean - 2.756815599614018);
  const double e2 = std::abs(unit_step - 3.256815599614018);
  return {"nll analytic values", e1 < 1e-9 && e2 < 1e-9,
          detail::format("nll(mu, I) = %.9f, nll(mu + e1, I) = %.9f, worst error %.2e", at_mean,
                         unit_step, std::max(e1, e2))};
}

/// Observation and label encode/decode plus manifest JSON round trip.
inline CheckResult format_round_trip() {
  Observation obs;
  for (std::size_t n = 0; n < kImagePixels; ++n) {
    obs.density[n] = 1e3 * std::exp(-static_cast<double>(n % 977) / 300.0);
    obs.phase[n] = wrap_phase(0.001 * static_cast<double>(n));
  }
  const auto stored = quantize(obs);
  const auto bytes = encode_observation(stored);
  const bool size_ok = bytes.size() == kObservationRecordBytes;
  const bool obs_ok = decode_observation(bytes.data()) == stored &&
                      encode_observation(decode_observation(bytes.data())) == bytes;

  const PhysicalLabels labels{{-3.7e-10, 2.5e5, 17.25}};
  const auto lbytes = encode_labels(labels);
  bool labels_ok = lbytes.size() == kLabelRecordBytes;
  for (std::size_t a = 0; a < 3 && labels_ok; ++a)
    labels_ok = nlse::detail::get_le<double>(lbytes.data() + 8 * a) == labels[a];

  DatasetManifest m;
  m.ranges[kN2].count = m.ranges[kIsat].count = m.ranges[kAlpha].count = 3;
  m.sample_count = m.ranges.total();
  m.master_seed = 0xDEADBEEFCAFEULL;
  m = split(m, {0.8, 0.1, 0.1}, 42);
  m.density_max = 123.456;
  const auto back = manifest_from_json(to_json(m));
  const bool manifest_ok = to_json(back) == to_json(m);

  const bool ok = size_ok && obs_ok && labels_ok && manifest_ok;
  return {"dataset format round trip", ok,
          std::string("observation ") + (obs_ok && size_ok ? "ok" : "MISMATCH") + ", labels " +
              (labels_ok ? "ok" : "MISMATCH") + ", manifest " +
              (manifest_ok ? "ok" : "MISMATCH")};
}

struct SelftestOptions {
  /// Fault injection: sign of the diffraction phase.
  double kinetic_sign = 1.0;
  /// Coarsest step count of the Strang convergence study.
  std::size_t strang_base_steps = 50;
};

/// Reduced-cost grid used by the self-test: 224^2 over 8 waists.
inline TransverseGrid selftest_grid() { return TransverseGrid::square(224, 13.6e-3); }

inline std::vector<CheckResult> run_selftest(const SelftestOptions& opts = {}) {
  SolverOptions solver;
  solver.kinetic_sign = opts.kinetic_sign;
  const auto grid = selftest_grid();
  std::vector<CheckResult> results;
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      results.push_back(fn());
    } catch (const std::exception& e) {
      results.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("power conservation (alpha = 0)",
          [&] { return power_conservation(grid, 200, solver); });
  guarded("Beer-Lambert absorption",
          [&] { return beer_lambert(grid, 50, {13.0, 20.0, 30.0}, solver); });
  guarded("linear diffraction (Gaussian beam at z_R)", [&] { return diffraction(solver); });
  guarded("Strang second-order convergence",
          [&] { return strang_order(grid, opts.strang_base_steps, solver); });
  guarded("nll analytic values", [] { return nll_analytic_values(); });
  guarded("dataset format round trip", [] { return format_round_trip(); });
  return results;
}

}  // namespace nlse::checks
