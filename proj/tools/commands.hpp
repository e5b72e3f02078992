#pragma once

// Subcommand bodies of nlse-est. Each returns the process exit status:
// 0 success, 1 configuration or input-format error, 2 solver blow-up,
// 3 I/O failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlse/nlse.hpp"
#include "nlse/checks.hpp"

namespace nlse::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kBlowUp = 2, kIoError = 3 };

struct GenerateArgs {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  bool quiet = false;
};

inline int cmd_generate(const GenerateArgs& args) {
  DatasetManifest manifest;
  try {
    manifest = read_manifest(args.config);
    if (args.seed) manifest.master_seed = *args.seed;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    GenerateOptions opts;
    opts.threads = args.threads;
    if (!args.quiet)
      opts.progress = [](std::size_t done, std::size_t total) {
        if (done == total || done % 100 == 0)
          std::cerr << "\rgenerated " << done << '/' << total << std::flush;
        if (done == total) std::cerr << '\n';
      };
    manifest = generate(std::move(manifest), args.out, opts);
  } catch (const SampleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.blow_up() ? kBlowUp : kConfigError;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << nlohmann::json{{"samples", manifest.sample_count},
                              {"wall_seconds", seconds},
                              {"out", args.out.string()}}
                   .dump()
            << '\n';
  return kOk;
}

struct SplitArgs {
  std::filesystem::path dataset;
  std::array<double, 3> fractions = {0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

inline int cmd_split(const SplitArgs& args) {
  try {
    const auto m = split_dataset(args.dataset, args.fractions, args.seed);
    std::cout << nlohmann::json{{"train", m.split.train.size()},
                                {"validation", m.split.validation.size()},
                                {"test", m.split.test.size()}}
                     .dump()
              << '\n';
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

struct OracleArgs {
  std::filesystem::path dataset;
  std::size_t index = 0;
  std::string method = "nelder-mead";
  std::size_t budget = 500;
};

inline nlohmann::json to_json(const oracle::FitResult& r, const ParameterRanges& ranges) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : r.trace)
    trace.push_back({t.point[0], t.point[1], t.point[2], t.objective});
  const auto phys = denormalize_labels(r.best, ranges);
  return {{"best", r.best.values},
          {"best_physical", phys.values},
          {"objective", r.objective},
          {"evaluations", r.evaluations},
          {"converged", r.converged},
          {"trace", trace}};
}

inline int cmd_oracle(const OracleArgs& args) {
  try {
    const DatasetReader dataset(args.dataset);
    oracle::FitOptions opts;
    opts.method = oracle::parse_method(args.method);
    opts.budget = args.budget;
    const auto target = dataset.observation(args.index);
    const oracle::Problem problem{dataset.manifest().scenario, dataset.manifest().ranges};
    const auto result = oracle::fit(target, problem, opts);
    auto j = to_json(result, problem.ranges);
    j["index"] = args.index;
    j["truth"] = dataset.normalized_labels(args.index).values;
    std::cout << j.dump() << '\n';
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

struct EvalArgs {
  std::filesystem::path predictions;
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::optional<std::filesystem::path> plot;
};

inline int cmd_eval(const EvalArgs& args) {
  try {
    const DatasetReader dataset(args.dataset);
    const auto rows = resolve_predictions(read_predictions(args.predictions), dataset);
    const auto report = evaluate(rows);
    const auto j = to_json(report);
    {
      std::ofstream out(args.out, std::ios::trunc);
      if (!out) throw IoError("cannot write " + args.out.string());
      out << j.dump(2) << '\n';
      if (!out) throw IoError("failed writing " + args.out.string());
    }
    if (args.plot) write_prediction_plots(rows, report, *args.plot);
    std::cout << j.dump() << '\n';
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

inline int cmd_selftest(const checks::SelftestOptions& opts) {
  const auto results = checks::run_selftest(opts);
  std::vector<std::string> failed;
  for (const auto& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
    if (!r.passed) failed.push_back(r.name);
  }
  if (failed.empty()) return kOk;
  std::cerr << "failed checks:";
  for (const auto& f : failed) std::cerr << ' ' << '"' << f << '"';
  std::cerr << '\n';
  return kConfigError;
}

}  // namespace nlse::cli
