#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nlse/field.hpp"
#include "nlse/imaging.hpp"
#include "nlse/solver.hpp"

using namespace nlse;

namespace {

// 224^2 over 8 waists of the 1.7 mm beam: cheap but resolved.
TransverseGrid small_grid() { return TransverseGrid::square(224, 13.6e-3); }

double second_moment_radius(const ComplexField& f) {
  double r2 = 0.0, total = 0.0;
  const auto& g = f.grid();
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const double d = std::norm(f(i, j));
      r2 += (g.x(i) * g.x(i) + g.y(j) * g.y(j)) * d;
      total += d;
    }
  return std::sqrt(2.0 * r2 / total);
}

double l2(const ComplexField& a, const ComplexField& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.values().size(); ++n) s += std::norm(a.values()[n] - b.values()[n]);
  return std::sqrt(s);
}

}  // namespace

TEST(TransverseGrid, FrequenciesFollowFftOrdering) {
  const TransverseGrid g(8, 4, 8e-3, 2e-3);
  EXPECT_DOUBLE_EQ(g.dx(), 1e-3);
  EXPECT_DOUBLE_EQ(g.dy(), 0.5e-3);
  EXPECT_EQ(g.kx(0), 0.0);
  const double dk = 2.0 * std::numbers::pi / 8e-3;
  EXPECT_NEAR(g.kx(1), dk, 1e-9);
  EXPECT_NEAR(g.kx(3), 3 * dk, 1e-9);
  EXPECT_NEAR(g.kx(4), -4 * dk, 1e-9);
  EXPECT_NEAR(g.kx(7), -dk, 1e-9);
  EXPECT_EQ(g.x(4), 0.0);
  EXPECT_EQ(g.y(2), 0.0);
}

TEST(TransverseGrid, RejectsInvalidConfigurations) {
  EXPECT_THROW(TransverseGrid(0, 4, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(TransverseGrid(4, 4, -1.0, 1.0), InvalidArgument);
  EXPECT_THROW(TransverseGrid::square(896, 1.0).coarsened(3), InvalidArgument);
  EXPECT_EQ(TransverseGrid::square(896, 1.0).coarsened(4).nx(), 224u);
}

TEST(GaussianInput, PeakIntensityAndPowerMatchClosedForm) {
  const BeamParams beam;  // 2.1 W, 1.7 mm
  const auto grid = TransverseGrid::square(896, 25.5e-3);
  const auto field = gaussian_input(beam, grid);
  // 2 P / (pi w^2) evaluated by hand: 4.2 / (pi * 2.89e-6).
  const double peak = 4.2 / (std::numbers::pi * 2.89e-6);
  EXPECT_NEAR(peak, 4.626e5, 0.001e5);
  EXPECT_NEAR(std::norm(field(448, 448)), peak, 1e-9 * peak);
  EXPECT_NEAR(field.power(), 2.1, 2.1e-6);
}

TEST(GaussianInput, UnitPowerAndLinearScaling) {
  BeamParams beam;
  beam.power = 1.0;
  const auto grid = small_grid();
  const auto one = gaussian_input(beam, grid);
  EXPECT_NEAR(one.power(), 1.0, 1e-6);
  beam.power = 2.0;
  const auto two = gaussian_input(beam, grid);
  for (std::size_t n = 0; n < grid.size(); n += 97)
    EXPECT_NEAR(std::norm(two.values()[n]), 2.0 * std::norm(one.values()[n]),
                1e-15 * std::norm(two.values()[n]) + 1e-300);
}

TEST(GaussianInput, RejectsSmallWindowsAndBadBeams) {
  const BeamParams beam;
  EXPECT_THROW(gaussian_input(beam, TransverseGrid::square(224, 7.9 * beam.waist)),
               WindowTooSmall);
  BeamParams bad = beam;
  bad.power = 0.0;
  EXPECT_THROW(gaussian_input(bad, small_grid()), InvalidArgument);
  bad = beam;
  bad.wavelength = -1.0;
  EXPECT_THROW(gaussian_input(bad, small_grid()), InvalidArgument);
}

TEST(StepLinear, PlaneWaveIsUnchanged) {
  const auto grid = TransverseGrid::square(64, 1e-3);
  const ComplexField plane(grid, Complex{0.7, -0.2});
  const auto out = step_linear(plane, BeamParams{}, 0.05);
  for (const auto& v : out.values()) {
    EXPECT_NEAR(v.real(), 0.7, 1e-13);
    EXPECT_NEAR(v.imag(), -0.2, 1e-13);
  }
}

TEST(StepLinear, GaussianBeamDoublesAreaAtRayleighLength) {
  BeamParams beam;
  beam.power = 1.0;
  beam.waist = 50e-6;
  const auto grid = TransverseGrid::square(512, 32.0 * beam.waist);
  const double z_r = std::numbers::pi * beam.waist * beam.waist / beam.wavelength;
  EXPECT_NEAR(z_r, 1.007e-2, 0.001e-2);
  const auto in = gaussian_input(beam, grid);
  EXPECT_NEAR(second_moment_radius(in), beam.waist, 1e-3 * beam.waist);

  // Half-steps compose into the same propagation.
  const auto out = step_linear(step_linear(in, beam, 0.5 * z_r), beam, 0.5 * z_r);
  EXPECT_NEAR(second_moment_radius(out) / (std::numbers::sqrt2 * beam.waist), 1.0, 5e-3);
  EXPECT_NEAR(out.power() / in.power(), 1.0, 1e-12);
}

TEST(StepLinear, IsUnitaryForArbitraryFields) {
  const auto grid = TransverseGrid::square(96, 2e-3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexField f(grid);
  for (auto& v : f.values()) v = {n(rng), n(rng)};
  for (double dz : {-0.01, 1e-4, 0.3}) {
    const auto out = step_linear(f, BeamParams{}, dz);
    EXPECT_NEAR(out.power() / f.power(), 1.0, 1e-12);
  }
}

TEST(StepLinear, RejectsNonFiniteInput) {
  ComplexField f(TransverseGrid::square(16, 1e-3), Complex{1.0});
  f(3, 3) = Complex{std::nan(""), 0.0};
  EXPECT_THROW(step_linear(f, BeamParams{}, 1e-3), InvalidArgument);
  ComplexField ok(TransverseGrid::square(16, 1e-3), Complex{1.0});
  EXPECT_THROW(step_linear(ok, BeamParams{}, INFINITY), InvalidArgument);
}

TEST(StepNonlinear, BeerLambertFactor) {
  const auto f = gaussian_input(BeamParams{}, small_grid());
  MediumParams m;
  m.n2 = 0.0;
  m.alpha = 13.0;
  const auto out = step_nonlinear(f, BeamParams{}, m, 0.2);
  EXPECT_NEAR(std::exp(-2.6), 7.427e-2, 1e-5);
  EXPECT_NEAR(out.power() / f.power(), std::exp(-2.6), 1e-14);
}

TEST(StepNonlinear, IdentityWithoutNonlinearityOrLoss) {
  const auto f = gaussian_input(BeamParams{}, small_grid());
  MediumParams m;
  m.n2 = 0.0;
  m.alpha = 0.0;
  const auto out = step_nonlinear(f, BeamParams{}, m, 0.01);
  for (std::size_t n = 0; n < f.values().size(); ++n) {
    EXPECT_EQ(out.values()[n], f.values()[n]);
  }
}

TEST(StepNonlinear, PhaseSaturatesAtIsat) {
  const BeamParams beam;
  MediumParams m;
  m.alpha = 0.0;
  m.i_sat = 1e3;
  const double dz = 1e-3;
  const double intensity = 1e4 * m.i_sat;
  const ComplexField f(TransverseGrid::square(8, 1e-3), Complex{std::sqrt(intensity), 0.0});
  const auto out = step_nonlinear(f, beam, m, dz);
  const double plateau = beam.k0() * m.n2 / m.n0 * m.i_sat * dz;
  EXPECT_NEAR(std::arg(out(2, 5)) / plateau, 1.0, 2e-4);
  EXPECT_NEAR(std::abs(out(2, 5)), std::sqrt(intensity), 1e-9 * std::sqrt(intensity));
}

TEST(StepNonlinear, PhaseFollowsDecayingIntensity) {
  // Reference: midpoint-rule quadrature of k0 n2 I(z)/(1 + I(z)/I_sat),
  // I(z) = I0 exp(-alpha z), over the step.
  const BeamParams beam;
  MediumParams m;
  m.alpha = 25.0;
  m.i_sat = 3e5;
  const double dz = 0.01, i0 = 4e5;
  double integral = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double z = (k + 0.5) * dz / n;
    const double i = i0 * std::exp(-m.alpha * z);
    integral += i / (1.0 + i / m.i_sat) * dz / n;
  }
  const ComplexField f(TransverseGrid::square(8, 1e-3), Complex{std::sqrt(i0), 0.0});
  const auto out = step_nonlinear(f, beam, m, dz);
  const double expected = wrap_phase(beam.k0() * m.n2 * integral);
  EXPECT_NEAR(std::arg(out(0, 0)), expected, 1e-6);
}

TEST(StepNonlinear, RejectsInvalidMedium) {
  const ComplexField f(TransverseGrid::square(8, 1e-3), Complex{1.0});
  MediumParams m;
  m.i_sat = 0.0;
  EXPECT_THROW(step_nonlinear(f, BeamParams{}, m, 1e-3), InvalidArgument);
  m = MediumParams{};
  m.alpha = -1.0;
  EXPECT_THROW(step_nonlinear(f, BeamParams{}, m, 1e-3), InvalidArgument);
  EXPECT_THROW(step_nonlinear(f, BeamParams{}, MediumParams{}, 0.0), InvalidArgument);
}

TEST(Propagate, ConservesPowerWithoutAbsorption) {
  const BeamParams beam;
  const auto in = gaussian_input(beam, small_grid());
  for (double n2 : {-1e-9, -1e-10}) {
    MediumParams m;
    m.n2 = n2;
    m.alpha = 0.0;
    const auto out = propagate(in, beam, m, {0.2, 200});
    EXPECT_LT(std::abs(out.power() / in.power() - 1.0), 1e-8);
  }
}

TEST(Propagate, ExactAbsorptionLaw) {
  const BeamParams beam;
  const auto in = gaussian_input(beam, small_grid());
  MediumParams m;
  m.alpha = 30.0;
  const auto out = propagate(in, beam, m, {0.2, 40});
  EXPECT_NEAR(std::exp(-6.0), 2.479e-3, 1e-6);
  EXPECT_NEAR(out.power() / in.power() / std::exp(-6.0), 1.0, 1e-9);
}

TEST(Propagate, SecondOrderSelfConvergence) {
  const BeamParams beam;
  const MediumParams m{-5e-10, 5e5, 20.0, 1.0};
  const auto in = gaussian_input(beam, small_grid());
  const auto a = propagate(in, beam, m, {0.2, 200});
  const auto b = propagate(in, beam, m, {0.2, 400});
  const auto c = propagate(in, beam, m, {0.2, 800});
  const double ratio = l2(a, b) / l2(b, c);
  EXPECT_GE(ratio, 3.5);
  EXPECT_LE(ratio, 4.5);
}

TEST(Propagate, IsDeterministic) {
  const BeamParams beam;
  const auto in = gaussian_input(beam, small_grid());
  const auto a = propagate(in, beam, MediumParams{}, {0.2, 30});
  const auto b = propagate(in, beam, MediumParams{}, {0.2, 30});
  for (std::size_t n = 0; n < a.values().size(); ++n) ASSERT_EQ(a.values()[n], b.values()[n]);
}

TEST(Propagate, SaturatedAbsorptionOptionLosesLessPower) {
  const BeamParams beam;
  const auto in = gaussian_input(beam, small_grid());
  SolverOptions opts;
  opts.saturate_absorption = true;
  const MediumParams m;
  const auto plain = propagate(in, beam, m, {0.2, 50});
  const auto saturated = propagate(in, beam, m, {0.2, 50}, opts);
  EXPECT_GT(saturated.power(), plain.power());
}

TEST(Propagate, ReportsBlowUpStep) {
  const BeamParams beam;
  const auto in = gaussian_input(beam, small_grid());
  MediumParams m;
  m.n2 = 1e300;  // phase overflows to inf on the first nonlinear step
  m.i_sat = 1e300;
  try {
    propagate(in, beam, m, {0.2, 10});
    FAIL() << "expected BlowUp";
  } catch (const BlowUp& e) {
    EXPECT_EQ(e.step(), 0u);
  }
}

TEST(Propagate, RequiresResolvedBeam) {
  const BeamParams beam;
  // 1.7 mm waist on 0.1 mm cells is 34 samples across; 0.25 mm cells give 13.6.
  const auto coarse = TransverseGrid::square(64, 16e-3);
  EXPECT_THROW(propagate(gaussian_input(beam, coarse), beam, MediumParams{}, {0.2, 1}),
               InvalidArgument);
}
