#pragma once

#include <cstddef>

#include "nlse/field.hpp"
#include "nlse/imaging.hpp"
#include "nlse/solver.hpp"

namespace nlse {

/// Everything about an experiment except the medium triplet: beam,
/// computational grid, coarsening to the camera grid, and propagation.
struct Scenario {
  BeamParams beam;
  /// 896^2 over a 25.5 mm window (15 waists), coarsened 4x to 224^2.
  TransverseGrid grid = TransverseGrid::square(896, 25.5e-3);
  std::size_t downsample_factor = 4;
  PropagationConfig propagation;
  double n0 = 1.0;
  SolverOptions solver;

  void validate() const {
    beam.validate();
    propagation.validate();
    if (downsample_factor == 0 || grid.nx() != kImageSide * downsample_factor ||
        grid.ny() != kImageSide * downsample_factor)
      throw InvalidArgument(
          "computational grid must equal 224 x downsample_factor per axis");
  }

  MediumParams medium(double n2, double i_sat, double alpha) const {
    return {n2, i_sat, alpha, n0};
  }
};

/// Noiseless observation of the scenario's output plane for one medium.
inline Observation simulate_observation(const Scenario& scenario,
                                        const MediumParams& medium) {
  scenario.validate();
  const auto input = gaussian_input(scenario.beam, scenario.grid);
  const auto output = propagate(input, scenario.beam, medium,
                                scenario.propagation, scenario.solver);
  return measure(downsample_field(output, scenario.downsample_factor));
}

}  // namespace nlse
