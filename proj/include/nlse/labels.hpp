#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nlse/error.hpp"

namespace nlse {

/// Axis order used everywhere a parameter triplet appears.
enum Axis : std::size_t { kN2 = 0, kIsat = 1, kAlpha = 2 };
inline constexpr std::array<const char*, 3> kAxisNames = {"n2", "isat", "alpha"};

struct PhysicalTag {};
struct NormalizedTag {};

/// (n2, I_sat, alpha) triplet. The tag separates physical units from the
/// min-max normalized [0,1] space so the two cannot be mixed silently.
template <class Tag>
struct Triplet {
  std::array<double, 3> values{};

  double& operator[](std::size_t i) noexcept { return values[i]; }
  double operator[](std::size_t i) const noexcept { return values[i]; }

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

using PhysicalLabels = Triplet<PhysicalTag>;
using NormalizedLabels = Triplet<NormalizedTag>;

struct AxisRange {
  double min = 0.0;
  double max = 1.0;
  std::size_t count = 50;

  double span() const noexcept { return max - min; }

  /// i-th of `count` linearly spaced values; the last one is `max` exactly.
  double value(std::size_t i) const noexcept {
    if (i + 1 == count) return max;
    return min + static_cast<double>(i) * (span() / static_cast<double>(count - 1));
  }
};

/// Sampled parameter box. Defaults span the standard training box.
struct ParameterRanges {
  std::array<AxisRange, 3> axes = {AxisRange{-1e-9, -1e-10, 50},
                                   AxisRange{5e4, 1e6, 50},
                                   AxisRange{13.0, 30.0, 50}};

  const AxisRange& operator[](std::size_t i) const noexcept { return axes[i]; }
  AxisRange& operator[](std::size_t i) noexcept { return axes[i]; }

  std::size_t total() const noexcept {
    return axes[0].count * axes[1].count * axes[2].count;
  }

  void validate() const {
    for (std::size_t a = 0; a < 3; ++a) {
      const auto& ax = axes[a];
      if (!std::isfinite(ax.min) || !std::isfinite(ax.max) || !(ax.min < ax.max))
        throw InvalidArgument(std::string("range for ") + kAxisNames[a] +
                              " needs min < max");
      if (ax.count < 2)
        throw InvalidArgument(std::string("count for ") + kAxisNames[a] +
                              " must be >= 2");
    }
  }
};

/// Tolerance, as a fraction of the axis span, for labels sitting just
/// outside the range.
inline constexpr double kLabelRangeTolerance = 1e-9;

inline NormalizedLabels normalize_labels(const PhysicalLabels& physical,
                                         const ParameterRanges& ranges) {
  NormalizedLabels out;
  for (std::size_t a = 0; a < 3; ++a) {
    const auto& ax = ranges[a];
    const double u = (physical[a] - ax.min) / ax.span();
    if (!std::isfinite(u) || u < -kLabelRangeTolerance ||
        u > 1.0 + kLabelRangeTolerance)
      throw InvalidArgument(std::string("label ") + kAxisNames[a] + " = " +
                            std::to_string(physical[a]) + " is outside its range");
    out[a] = u;
  }
  return out;
}

inline PhysicalLabels denormalize_labels(const NormalizedLabels& normalized,
                                         const ParameterRanges& ranges) {
  PhysicalLabels out;
  for (std::size_t a = 0; a < 3; ++a) {
    const double u = normalized[a];
    if (!std::isfinite(u) || u < -kLabelRangeTolerance ||
        u > 1.0 + kLabelRangeTolerance)
      throw InvalidArgument(std::string("normalized label ") + kAxisNames[a] +
                            " is outside [0, 1]");
    out[a] = ranges[a].min + u * ranges[a].span();
  }
  return out;
}

/// Lexicographic enumeration, n2 outermost and alpha innermost.
inline std::vector<PhysicalLabels> enumerate_grid(const ParameterRanges& ranges) {
  ranges.validate();
  std::vector<PhysicalLabels> out;
  out.reserve(ranges.total());
  for (std::size_t i = 0; i < ranges[kN2].count; ++i)
    for (std::size_t j = 0; j < ranges[kIsat].count; ++j)
      for (std::size_t k = 0; k < ranges[kAlpha].count; ++k)
        out.push_back({{ranges[kN2].value(i), ranges[kIsat].value(j),
                        ranges[kAlpha].value(k)}});
  return out;
}

}  // namespace nlse
