// Acceptance gate: one [PASS]/[FAIL] line per criterion, non-zero exit on
// any failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "dense_oracle.hpp"
#include "nlse/checks.hpp"
#include "nlse/nlse.hpp"
#include "test_support.hpp"

using namespace nlse;
namespace fs = std::filesystem;

namespace {

struct Line {
  std::string name;
  bool passed;
  std::string detail;
};

class Gate {
 public:
  void record(const std::string& suite, const Line& l) {
    std::printf("[%s] %s / %s: %s\n", l.passed ? "PASS" : "FAIL", suite.c_str(),
                l.name.c_str(), l.detail.c_str());
    std::fflush(stdout);
    failures_ += l.passed ? 0 : 1;
  }
  void record(const std::string& suite, const checks::CheckResult& r) {
    record(suite, Line{r.name, r.passed, r.detail});
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string printf_string(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
void guarded(Gate& gate, const std::string& suite, const std::string& name, F&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    gate.record(suite, Line{name, false, std::string("threw: ") + e.what()});
  }
}

void solver_suite(Gate& gate) {
  const std::string suite = "solver";
  const auto t0 = std::chrono::steady_clock::now();
  const auto full = TransverseGrid::square(896, 25.5e-3);
  guarded(gate, suite, "power conservation", [&] {
    gate.record(suite, checks::power_conservation(full, 200));
  });
  guarded(gate, suite, "Beer-Lambert", [&] {
    gate.record(suite, checks::beer_lambert(full, 20, {13.0, 20.0, 30.0}));
  });
  guarded(gate, suite, "diffraction", [&] { gate.record(suite, checks::diffraction()); });
  guarded(gate, suite, "Strang order", [&] {
    auto r = checks::strang_order(TransverseGrid::square(448, 25.5e-3), 200);
    r.detail += " on 448^2 over 25.5 mm";
    gate.record(suite, r);
  });
  const double elapsed = seconds_since(t0);
  gate.record(suite, Line{"runtime", elapsed < 60.0,
                          printf_string("%.1f s single-threaded (limit 60 s)", elapsed)});
}

void regression_suite(Gate& gate) {
  const std::string suite = "regression-math";
  gate.record(suite, checks::nll_analytic_values());

  std::mt19937_64 rng(20240611);
  double worst_dense = 0.0, worst_rotation = 0.0, worst_gradient = 0.0;
  std::uniform_real_distribution<double> angle(-3.14, 3.14);
  for (int k = 0; k < 1000; ++k) {
    const auto p = testing::random_prediction(rng);
    const auto x = testing::random_target(rng);
    const double value = nll(x, p);
    worst_dense = std::max(worst_dense,
                           std::abs(value - testing::dense_nll(x, p)) / std::abs(value));

    const Eigen::Matrix3d r = (Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitY()) *
                               Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitX()))
                                  .toRotationMatrix();
    const auto s = p.covariance();
    Eigen::Matrix3d sigma;
    Eigen::Vector3d mu, xv;
    for (int i = 0; i < 3; ++i) {
      mu(i) = p.mean[i];
      xv(i) = x[i];
      for (int j = 0; j < 3; ++j) sigma(i, j) = s[i][j];
    }
    const Eigen::Matrix3d rs = r * sigma * r.transpose();
    const Eigen::Vector3d rmu = r * mu, rx = r * xv;
    Mat3 rs_arr{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rs_arr[i][j] = 0.5 * (rs(i, j) + rs(j, i));
    const auto rotated = GaussianPrediction::from_covariance({rmu(0), rmu(1), rmu(2)}, rs_arr);
    worst_rotation = std::max(
        worst_rotation,
        std::abs(nll({rx(0), rx(1), rx(2)}, rotated) - value) / std::max(1.0, std::abs(value)));

    worst_gradient = std::max(worst_gradient, nll_gradient_check(p, x, 1e-5));
  }
  gate.record(suite, Line{"dense oracle agreement", worst_dense < 1e-10,
                          printf_string("worst relative error %.2e over 1000 cases (limit 1e-10)",
                                        worst_dense)});
  gate.record(suite, Line{"rotation invariance", worst_rotation < 1e-10,
                          printf_string("worst deviation %.2e over 1000 rotations (limit 1e-10)",
                                        worst_rotation)});
  gate.record(suite,
              Line{"finite-difference gradient", worst_gradient < 1e-4,
                   printf_string("worst relative deviation %.2e over 1000 points (limit 1e-4)",
                                 worst_gradient)});
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dataset_suite(Gate& gate) {
  const std::string suite = "dataset";
  testing::TempDir dir;

  guarded(gate, suite, "2x2x2 generation", [&] {
    // Default 896^2 scenario and default noise, two values per axis.
    DatasetManifest m;
    for (auto& ax : m.ranges.axes) ax.count = 2;
    m.master_seed = 7;
    GenerateOptions opts;
    opts.threads = std::max(1u, std::thread::hardware_concurrency());
    const auto t0 = std::chrono::steady_clock::now();
    const auto written = generate(m, dir / "ds", opts);
    const auto obs_size = fs::file_size(dir / "ds" / kObservationsFile);
    const auto lab_size = fs::file_size(dir / "ds" / kLabelsFile);
    gate.record(suite, Line{"byte sizes", obs_size == 8 * 401408 && lab_size == 8 * 24,
                            printf_string("observations %zu B (expect 3211264), labels %zu B "
                                          "(expect 192), %.1f s",
                                          static_cast<std::size_t>(obs_size),
                                          static_cast<std::size_t>(lab_size),
                                          seconds_since(t0))});

    const DatasetReader reader(dir / "ds");
    const auto grid = enumerate_grid(reader.manifest().ranges);
    bool labels_ok = true, obs_ok = true;
    for (std::size_t i = 0; i < 8; ++i) labels_ok = labels_ok && reader.labels(i) == grid[i];
    const auto raw = slurp(dir / "ds" / kObservationsFile);
    for (std::size_t i : {0u, 7u}) {
      const auto fresh = make_sample(written, grid[i], i);
      const auto begin = raw.begin() + static_cast<std::ptrdiff_t>(i * kObservationRecordBytes);
      const std::vector<unsigned char> stored(begin, begin + kObservationRecordBytes);
      obs_ok = obs_ok && reader.observation(i) == fresh.observation &&
               encode_observation(fresh.observation) == stored;
    }
    gate.record(suite, Line{"write/read bit-identical", labels_ok && obs_ok,
                            std::string("labels ") + (labels_ok ? "identical" : "DIFFER") +
                                ", regenerated records 0 and 7 " +
                                (obs_ok ? "identical" : "DIFFER")});
  });

  guarded(gate, suite, "normalize round trip", [&] {
    const ParameterRanges ranges;
    double worst_phys = 0.0, worst_norm = 0.0;
    for (const auto& l : enumerate_grid(ranges)) {
      const auto back = denormalize_labels(normalize_labels(l, ranges), ranges);
      for (std::size_t a = 0; a < 3; ++a)
        worst_phys = std::max(worst_phys, std::abs(back[a] - l[a]) / std::abs(l[a]));
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100000; ++k) {
      const NormalizedLabels n{{u(rng), u(rng), u(rng)}};
      const auto again = normalize_labels(denormalize_labels(n, ranges), ranges);
      for (std::size_t a = 0; a < 3; ++a)
        worst_norm = std::max(worst_norm, std::abs(again[a] - n[a]));
    }
    gate.record(suite, Line{"normalize/denormalize round trip",
                            worst_phys < 1e-12 && worst_norm < 1e-12,
                            printf_string("physical %.2e relative, normalized %.2e absolute "
                                          "(limit 1e-12)",
                                          worst_phys, worst_norm)});
  });

  guarded(gate, suite, "split sizes", [&] {
    const auto s = split_indices(125000, {0.8, 0.1, 0.1}, 0);
    const bool ok =
        s.train.size() == 100000 && s.validation.size() == 12500 && s.test.size() == 12500;
    gate.record(suite, Line{"split sizes", ok,
                            printf_string("(%zu, %zu, %zu) for N = 125000", s.train.size(),
                                          s.validation.size(), s.test.size())});
  });
}

void oracle_suite(Gate& gate) {
  const std::string suite = "oracle";
  // Physical beam, medium ranges and propagation length of the default
  // scenario, simulated on a 224^2 grid over 8 waists so that the camera
  // image resolves the nonlinear phase.
  DatasetManifest m;
  for (auto& ax : m.ranges.axes) ax.count = 5;
  m.scenario = testing::camera_scenario(50);
  m.master_seed = 1;
  const auto grid = enumerate_grid(m.ranges);

  // Ten distinct grid points chosen by seed.
  RandomStream rng(splitmix64(2718));
  std::vector<std::size_t> picks;
  while (picks.size() < 10) {
    const auto i = static_cast<std::size_t>(uniform_below(rng, grid.size()));
    if (std::find(picks.begin(), picks.end(), i) == picks.end()) picks.push_back(i);
  }

  const oracle::Problem problem{m.scenario, m.ranges};
  oracle::FitOptions opts;
  opts.budget = 300;
  opts.xtol = 1e-3;
  opts.threads = std::max(1u, std::thread::hardware_concurrency());

  const auto t0 = std::chrono::steady_clock::now();
  for (const bool noisy : {false, true}) {
    auto manifest = m;
    if (!noisy) manifest.noise = NoiseConfig::disabled();
    double worst = 0.0;
    std::size_t evaluations = 0;
    std::string per_sample;
    for (auto i : picks) {
      const auto sample = make_sample(manifest, grid[i], i);
      const auto r = oracle::fit(sample.observation, problem, opts);
      evaluations += r.evaluations;
      double err = 0.0;
      for (std::size_t a = 0; a < 3; ++a)
        err = std::max(err, std::abs(r.best[a] - sample.labels_normalized[a]));
      worst = std::max(worst, err);
      per_sample += printf_string(" %zu:%.4f", i, err);
    }
    const double limit = noisy ? 0.05 : 0.02;
    gate.record(suite,
                Line{noisy ? "identifiability with default noise" : "identifiability, noiseless",
                     worst <= limit,
                     printf_string("worst axis error %.4f over 10 samples (limit %.2f), "
                                   "%zu evaluations; per sample%s",
                                   worst, limit, evaluations, per_sample.c_str())});
  }
  const double elapsed = seconds_since(t0);
  gate.record(suite, Line{"runtime", elapsed < 1800.0,
                          printf_string("%.0f s for 20 fits (limit 1800 s)", elapsed)});
}

void evaluator_suite(Gate& gate) {
  const std::string suite = "evaluator";
  testing::TempDir dir;
  const auto manifest = testing::write_labels_only(dir / "ds", DatasetManifest{});
  const DatasetReader reader(dir / "ds");

  const Vec3 sigma{0.049, 0.028, 0.033};
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<PredictionRow> rows;
  for (auto i : manifest.split.test) {
    const auto t = reader.normalized_labels(i).values;
    rows.push_back({i,
                    {t[0] + sigma[0] * normal(rng), t[1] + sigma[1] * normal(rng),
                     t[2] + sigma[2] * normal(rng)},
                    t});
  }
  write_predictions(dir / "pred.csv", rows);
  const auto report =
      evaluate(resolve_predictions(read_predictions(dir / "pred.csv"), reader));

  // 50 evenly spaced levels on [0, 1]: variance 51/588.
  const double truth_var = 51.0 / 588.0;
  bool sigma_ok = true, r2_ok = true;
  std::string detail = printf_string("n = %zu;", report.count);
  for (std::size_t a = 0; a < 3; ++a) {
    const double expected_r2 = 1.0 - sigma[a] * sigma[a] / truth_var;
    const double rel = std::abs(report.sigma[a] / sigma[a] - 1.0);
    sigma_ok = sigma_ok && rel < 0.05;
    r2_ok = r2_ok && std::abs(report.r2[a] - expected_r2) < 0.01;
    detail += printf_string(" %s sigma %.4f (target %.3f), R2 %.4f (expected %.4f);",
                            kAxisNames[a], report.sigma[a], sigma[a], report.r2[a], expected_r2);
  }
  gate.record(suite, Line{"sigma within 5%", sigma_ok, detail});
  gate.record(suite, Line{"R2 within 0.01", r2_ok && report.count == 12500,
                          printf_string("aggregate R2 %.4f, MAE %.2f%%", report.r2_aggregate,
                                        report.mae_percent_aggregate)});
}

}  // namespace

int main() {
  Gate gate;
  const auto t0 = std::chrono::steady_clock::now();
  solver_suite(gate);
  regression_suite(gate);
  dataset_suite(gate);
  evaluator_suite(gate);
  oracle_suite(gate);
  std::printf("%s: %d failing criteria, %.0f s total\n",
              gate.failures() == 0 ? "ACCEPTED" : "REJECTED", gate.failures(),
              seconds_since(t0));
  return gate.failures() == 0 ? 0 : 1;
}
