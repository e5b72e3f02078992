#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlse/error.hpp"
#include "nlse/imaging.hpp"
#include "nlse/labels.hpp"
#include "nlse/scenario.hpp"

namespace nlse {

inline constexpr const char* kFormatVersion = "nlse-ds/1";

struct SplitAssignment {
  std::uint64_t seed = 0;
  std::array<double, 3> fractions = {0.8, 0.1, 0.1};  // train, validation, test
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;

  bool assigned() const noexcept {
    return !train.empty() || !validation.empty() || !test.empty();
  }
};

/// Complete provenance of a dataset. The same document is the generation
/// config: fields left out of a config file keep their defaults.
struct DatasetManifest {
  std::string format_version = kFormatVersion;
  ParameterRanges ranges;
  std::string distribution = "linear";
  Scenario scenario;
  NoiseConfig noise;
  std::uint64_t master_seed = 0;
  std::size_t sample_count = 0;
  SplitAssignment split;
  /// Largest density value stored in the dataset; set by generation.
  std::optional<double> density_max;

  void validate() const {
    if (format_version != kFormatVersion)
      throw FormatError("unsupported dataset format version '" + format_version +
                        "'");
    if (distribution != "linear")
      throw InvalidArgument("only the 'linear' sampling distribution is supported");
    ranges.validate();
    scenario.validate();
    noise.validate();
    if (sample_count != ranges.total())
      throw InvalidArgument("sample_count does not equal the product of axis counts");
  }
};

namespace detail {

using nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

inline json axis_to_json(const AxisRange& ax) {
  return {{"min", ax.min}, {"max", ax.max}, {"count", ax.count}};
}

inline AxisRange axis_from_json(const json& j, const AxisRange& fallback) {
  return {get_or(j, "min", fallback.min), get_or(j, "max", fallback.max),
          get_or(j, "count", fallback.count)};
}

}  // namespace detail

inline nlohmann::json to_json(const DatasetManifest& m) {
  using nlohmann::json;
  const auto& s = m.scenario;
  json ranges;
  for (std::size_t a = 0; a < 3; ++a)
    ranges[kAxisNames[a]] = detail::axis_to_json(m.ranges[a]);
  ranges["distribution"] = m.distribution;

  json j;
  j["format_version"] = m.format_version;
  j["ranges"] = ranges;
  j["beam"] = {{"power", s.beam.power},
               {"waist", s.beam.waist},
               {"wavelength", s.beam.wavelength}};
  j["grid"] = {{"nx", s.grid.nx()},
               {"ny", s.grid.ny()},
               {"window_x", s.grid.window_x()},
               {"window_y", s.grid.window_y()},
               {"downsample_factor", s.downsample_factor}};
  j["propagation"] = {{"length", s.propagation.length},
                      {"n_steps", s.propagation.n_steps}};
  j["medium"] = {{"n0", s.n0},
                 {"saturate_absorption", s.solver.saturate_absorption}};
  j["noise"] = {{"photon_budget", m.noise.photon_budget},
                {"gaussian_sigma_rel", m.noise.gaussian_sigma_rel},
                {"phase_sigma", m.noise.phase_sigma},
                {"shot_noise", m.noise.shot_noise},
                {"gaussian_noise", m.noise.gaussian_noise},
                {"phase_noise", m.noise.phase_noise}};
  j["master_seed"] = m.master_seed;
  j["sample_count"] = m.sample_count;
  j["split"] = {{"seed", m.split.seed},
                {"fractions", m.split.fractions},
                {"train", m.split.train},
                {"validation", m.split.validation},
                {"test", m.split.test}};
  j["statistics"] = {{"density_max", m.density_max ? json(*m.density_max) : json()}};
  return j;
}

/// Parses a manifest or a partial generation config. Missing sample_count
/// is derived from the ranges.
inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  using detail::get_or;
  DatasetManifest m;
  try {
    if (!j.is_object()) throw FormatError("manifest must be a JSON object");
    m.format_version = get_or(j, "format_version", m.format_version);
    if (j.contains("ranges")) {
      const auto& r = j.at("ranges");
      for (std::size_t a = 0; a < 3; ++a)
        if (r.contains(kAxisNames[a]))
          m.ranges[a] = detail::axis_from_json(r.at(kAxisNames[a]), m.ranges[a]);
      m.distribution = get_or(r, "distribution", m.distribution);
    }
    auto& s = m.scenario;
    if (j.contains("beam")) {
      const auto& b = j.at("beam");
      s.beam.power = get_or(b, "power", s.beam.power);
      s.beam.waist = get_or(b, "waist", s.beam.waist);
      s.beam.wavelength = get_or(b, "wavelength", s.beam.wavelength);
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      const auto nx = get_or(g, "nx", s.grid.nx());
      const auto ny = get_or(g, "ny", nx);
      const auto wx = get_or(g, "window_x", s.grid.window_x());
      const auto wy = get_or(g, "window_y", wx);
      s.grid = TransverseGrid(nx, ny, wx, wy);
      s.downsample_factor = get_or(g, "downsample_factor", s.downsample_factor);
    }
    if (j.contains("propagation")) {
      const auto& p = j.at("propagation");
      s.propagation.length = get_or(p, "length", s.propagation.length);
      s.propagation.n_steps = get_or(p, "n_steps", s.propagation.n_steps);
    }
    if (j.contains("medium")) {
      const auto& md = j.at("medium");
      s.n0 = get_or(md, "n0", s.n0);
      s.solver.saturate_absorption =
          get_or(md, "saturate_absorption", s.solver.saturate_absorption);
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      m.noise.photon_budget = get_or(n, "photon_budget", m.noise.photon_budget);
      m.noise.gaussian_sigma_rel =
          get_or(n, "gaussian_sigma_rel", m.noise.gaussian_sigma_rel);
      m.noise.phase_sigma = get_or(n, "phase_sigma", m.noise.phase_sigma);
      m.noise.shot_noise = get_or(n, "shot_noise", m.noise.shot_noise);
      m.noise.gaussian_noise = get_or(n, "gaussian_noise", m.noise.gaussian_noise);
      m.noise.phase_noise = get_or(n, "phase_noise", m.noise.phase_noise);
    }
    m.master_seed = get_or(j, "master_seed", m.master_seed);
    m.sample_count = get_or(j, "sample_count", m.ranges.total());
    if (j.contains("split")) {
      const auto& sp = j.at("split");
      m.split.seed = get_or(sp, "seed", m.split.seed);
      m.split.fractions = get_or(sp, "fractions", m.split.fractions);
      m.split.train = get_or(sp, "train", m.split.train);
      m.split.validation = get_or(sp, "validation", m.split.validation);
      m.split.test = get_or(sp, "test", m.split.test);
    }
    if (j.contains("statistics")) {
      const auto& st = j.at("statistics");
      if (st.contains("density_max") && !st.at("density_max").is_null())
        m.density_max = st.at("density_max").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  m.validate();
  return m;
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

/// Writes via a temporary file and rename so readers never see a torn file.
inline void write_manifest(const DatasetManifest& m,
                           const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << to_json(m).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace nlse
