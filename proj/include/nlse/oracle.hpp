#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nlse/error.hpp"
#include "nlse/imaging.hpp"
#include "nlse/labels.hpp"
#include "nlse/scenario.hpp"

namespace nlse::oracle {

/// Scenario plus the parameter box that maps [0,1]^3 to physical units.
struct Problem {
  Scenario scenario;
  ParameterRanges ranges;
};

struct ObjectiveValue {
  double value = 0.0;
  bool solver_failed = false;
};

/// Mismatch between two observations: mean squared density difference
/// over the reference peak squared, plus mean squared principal-value
/// phase difference.
inline double observation_distance(const Observation& candidate,
                                   const Observation& target) {
  const double peak = target.peak_density();
  const double inv_peak2 = peak > 0.0 ? 1.0 / (peak * peak) : 1.0;
  double density = 0.0, phase = 0.0;
  for (std::size_t n = 0; n < kImagePixels; ++n) {
    const double dd = candidate.density[n] - target.density[n];
    const double dp = wrap_phase(candidate.phase[n] - target.phase[n]);
    density += dd * dd;
    phase += dp * dp;
  }
  return (density * inv_peak2 + phase) / static_cast<double>(kImagePixels);
}

inline void require_unit_cube(const NormalizedLabels& c) {
  for (double v : c.values)
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidArgument("oracle candidate must lie in [0,1]^3");
}

/// Noiseless re-simulation at `candidate` compared with `target`.
inline ObjectiveValue objective(const NormalizedLabels& candidate,
                                const Observation& target, const Problem& problem) {
  require_unit_cube(candidate);
  const auto phys = denormalize_labels(candidate, problem.ranges);
  try {
    const auto obs = simulate_observation(
        problem.scenario, problem.scenario.medium(phys[kN2], phys[kIsat], phys[kAlpha]));
    return {observation_distance(obs, target), false};
  } catch (const BlowUp&) {
    return {std::numeric_limits<double>::infinity(), true};
  }
}

enum class Method { kGrid, kNelderMead };

inline Method parse_method(const std::string& name) {
  if (name == "grid") return Method::kGrid;
  if (name == "nelder-mead") return Method::kNelderMead;
  throw InvalidArgument("unknown oracle method '" + name + "'");
}

struct FitOptions {
  Method method = Method::kNelderMead;
  std::size_t budget = 500;  // objective evaluations, >= 27
  std::size_t threads = 1;   // grid-stage parallelism
  double xtol = 1e-5;        // simplex diameter / grid spacing stop
  double ftol = 1e-14;       // simplex objective spread stop
};

struct TraceEntry {
  NormalizedLabels point;
  double objective = 0.0;
};

struct FitResult {
  NormalizedLabels best;
  double objective = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;
};

namespace detail {

class Evaluator {
 public:
  Evaluator(const Observation& target, const Problem& problem, const FitOptions& options)
      : target_(target), problem_(problem), options_(options) {}

  std::size_t remaining() const noexcept {
    return options_.budget - result_.evaluations;
  }

  bool seen(const NormalizedLabels& p) const { return cache_.contains(p.values); }

  double value(const NormalizedLabels& p) const { return cache_.at(p.values); }

  /// Evaluates points not seen before, in parallel, recording them in order.
  void evaluate_batch(const std::vector<NormalizedLabels>& points) {
    std::vector<NormalizedLabels> fresh;
    for (const auto& p : points)
      if (!seen(p) && std::find(fresh.begin(), fresh.end(), p) == fresh.end())
        fresh.push_back(p);
    std::vector<double> values(fresh.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k; (k = next++) < fresh.size();)
        values[k] = objective(fresh[k], target_, problem_).value;
    };
    const auto threads = std::min(std::max<std::size_t>(1, options_.threads), fresh.size());
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (std::size_t k = 0; k < fresh.size(); ++k) record(fresh[k], values[k]);
  }

  double evaluate(const NormalizedLabels& p) {
    const double v = objective(p, target_, problem_).value;
    record(p, v);
    return v;
  }

  FitResult& result() noexcept { return result_; }

 private:
  void record(const NormalizedLabels& p, double v) {
    cache_[p.values] = v;
    ++result_.evaluations;
    result_.trace.push_back({p, v});
    if (v < result_.objective) {
      result_.objective = v;
      result_.best = p;
    }
  }

  const Observation& target_;
  const Problem& problem_;
  const FitOptions& options_;
  std::map<std::array<double, 3>, double> cache_;
  FitResult result_;
};

/// Nodes per axis of the first grid level: 5 when the budget allows 5^3.
inline std::size_t coarse_nodes(std::size_t budget) { return budget >= 125 ? 5 : 3; }

inline std::vector<NormalizedLabels> lattice(const NormalizedLabels& center,
                                             double spacing, std::size_t nodes) {
  std::vector<NormalizedLabels> out;
  const double half = 0.5 * static_cast<double>(nodes - 1);
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j)
      for (std::size_t k = 0; k < nodes; ++k) {
        const std::array<std::size_t, 3> idx{i, j, k};
        NormalizedLabels p;
        for (std::size_t a = 0; a < 3; ++a)
          p[a] = std::clamp(center[a] + (static_cast<double>(idx[a]) - half) * spacing,
                            0.0, 1.0);
        out.push_back(p);
      }
  return out;
}

inline NormalizedLabels clamp_unit(NormalizedLabels p) {
  for (auto& v : p.values) v = std::clamp(v, 0.0, 1.0);
  return p;
}

inline void nelder_mead(Evaluator& ev, const NormalizedLabels& start, double step,
                        const FitOptions& options) {
  struct Vertex {
    NormalizedLabels x;
    double f;
  };
  auto eval = [&](const NormalizedLabels& p) -> std::optional<double> {
    if (ev.seen(p)) return ev.value(p);
    if (ev.remaining() == 0) return std::nullopt;
    return ev.evaluate(p);
  };

  std::vector<Vertex> simplex;
  simplex.push_back({start, ev.value(start)});
  for (std::size_t a = 0; a < 3; ++a) {
    NormalizedLabels p = start;
    p[a] = start[a] + step <= 1.0 ? start[a] + step : start[a] - step;
    auto f = eval(p);
    if (!f) return;
    simplex.push_back({p, *f});
  }

  auto combine = [](const NormalizedLabels& c, const NormalizedLabels& x, double t) {
    NormalizedLabels p;
    for (std::size_t a = 0; a < 3; ++a) p[a] = c[a] + t * (x[a] - c[a]);
    return clamp_unit(p);
  };

  for (;;) {
    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& l, const Vertex& r) { return l.f < r.f; });
    double diameter = 0.0;
    for (std::size_t v = 1; v < simplex.size(); ++v)
      for (std::size_t a = 0; a < 3; ++a)
        diameter = std::max(diameter, std::abs(simplex[v].x[a] - simplex[0].x[a]));
    const double spread = simplex.back().f - simplex.front().f;
    if (diameter <= options.xtol || spread <= options.ftol) {
      ev.result().converged = true;
      return;
    }

    NormalizedLabels centroid;
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t v = 0; v < 3; ++v) centroid[a] += simplex[v].x[a];
      centroid[a] /= 3.0;
    }
    auto& worst = simplex.back();

    const auto xr = combine(centroid, worst.x, -1.0);
    const auto fr = eval(xr);
    if (!fr) return;
    if (*fr < simplex[0].f) {
      const auto xe = combine(centroid, worst.x, -2.0);
      const auto fe = eval(xe);
      if (!fe) return;
      worst = *fe < *fr ? Vertex{xe, *fe} : Vertex{xr, *fr};
      continue;
    }
    if (*fr < simplex[2].f) {
      worst = {xr, *fr};
      continue;
    }
    // Outside contraction when the reflection beat the worst vertex,
    // inside contraction otherwise.
    const bool outside = *fr < worst.f;
    const auto xc = combine(centroid, worst.x, outside ? -0.5 : 0.5);
    const auto fc = eval(xc);
    if (!fc) return;
    if (*fc < (outside ? *fr : worst.f)) {
      worst = {xc, *fc};
      continue;
    }
    for (std::size_t v = 1; v < simplex.size(); ++v) {
      simplex[v].x = combine(simplex[0].x, simplex[v].x, 0.5);
      const auto fs = eval(simplex[v].x);
      if (!fs) return;
      simplex[v].f = *fs;
    }
  }
}

}  // namespace detail

/// Recovers the normalized triplet behind `target` by simulation in the loop.
///
/// Both methods start with a full lattice over [0,1]^3 (5^3 nodes when the
/// budget allows, 3^3 otherwise). `kGrid` then repeatedly evaluates a 3^3
/// lattice at half the previous spacing around the incumbent; `kNelderMead`
/// runs a simplex search from the lattice winner with an initial edge of
/// half the lattice spacing, clamping trial points into the unit cube.
/// Running out of budget returns the best point so far with converged = false.
inline FitResult fit(const Observation& target, const Problem& problem,
                     const FitOptions& options) {
  if (options.budget < 27) throw InvalidArgument("oracle budget must be >= 27");
  target.validate();
  problem.scenario.validate();
  problem.ranges.validate();

  detail::Evaluator ev(target, problem, options);
  const std::size_t nodes = detail::coarse_nodes(options.budget);
  double spacing = 1.0 / static_cast<double>(nodes - 1);
  ev.evaluate_batch(detail::lattice(NormalizedLabels{{0.5, 0.5, 0.5}}, spacing, nodes));

  if (options.method == Method::kGrid) {
    for (;;) {
      spacing *= 0.5;
      if (spacing < options.xtol) {
        ev.result().converged = true;
        break;
      }
      const auto level = detail::lattice(ev.result().best, spacing, 3);
      std::size_t fresh = 0;
      for (const auto& p : level) fresh += ev.seen(p) ? 0 : 1;
      if (fresh > ev.remaining()) break;
      ev.evaluate_batch(level);
    }
  } else {
    detail::nelder_mead(ev, ev.result().best, 0.5 * spacing, options);
  }
  return std::move(ev.result());
}

}  // namespace nlse::oracle
