#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "nlse/error.hpp"
#include "nlse/imaging.hpp"
#include "nlse/labels.hpp"
#include "nlse/manifest.hpp"
#include "nlse/rng.hpp"
#include "nlse/scenario.hpp"

namespace nlse {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kObservationsFile = "observations.f32";
inline constexpr const char* kLabelsFile = "labels.f64";

/// Bytes per record in observations.f32 (density then phase, binary32).
inline constexpr std::size_t kObservationRecordBytes = 2 * kImagePixels * 4;
/// Bytes per record in labels.f64 (n2, I_sat, alpha, binary64).
inline constexpr std::size_t kLabelRecordBytes = 3 * 8;

struct Sample {
  std::size_t index = 0;
  Observation observation;
  PhysicalLabels labels_physical;
  NormalizedLabels labels_normalized;
};

/// A sample generation failure, tagged with the sample that caused it.
class SampleError : public Error {
 public:
  SampleError(std::size_t index, bool blow_up, const std::string& what)
      : Error("sample " + std::to_string(index) + ": " + what),
        index_(index),
        blow_up_(blow_up) {}

  std::size_t index() const noexcept { return index_; }
  bool blow_up() const noexcept { return blow_up_; }

 private:
  std::size_t index_;
  bool blow_up_;
};

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

template <class T>
T get_le(const unsigned char* p) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

namespace detail {

// Rounding to binary32 can push a phase onto or past +-pi; step back inside.
inline float stored_phase(double p) noexcept {
  float f = static_cast<float>(p);
  if (static_cast<double>(f) >= std::numbers::pi ||
      static_cast<double>(f) < -std::numbers::pi)
    f = std::nextafter(f, 0.0f);
  return f;
}

}  // namespace detail

/// Serialized observation record. Values are narrowed to binary32.
inline std::vector<unsigned char> encode_observation(const Observation& obs) {
  std::vector<unsigned char> out;
  out.reserve(kObservationRecordBytes);
  for (double d : obs.density) detail::put_le(out, static_cast<float>(d));
  for (double p : obs.phase) detail::put_le(out, detail::stored_phase(p));
  return out;
}

inline Observation decode_observation(const unsigned char* bytes) {
  Observation obs;
  for (std::size_t n = 0; n < kImagePixels; ++n)
    obs.density[n] = detail::get_le<float>(bytes + 4 * n);
  const auto* phase = bytes + 4 * kImagePixels;
  for (std::size_t n = 0; n < kImagePixels; ++n)
    obs.phase[n] = detail::get_le<float>(phase + 4 * n);
  return obs;
}

inline std::vector<unsigned char> encode_labels(const PhysicalLabels& labels) {
  std::vector<unsigned char> out;
  out.reserve(kLabelRecordBytes);
  for (double v : labels.values) detail::put_le(out, v);
  return out;
}

/// Observation exactly as it will read back from disk.
inline Observation quantize(const Observation& obs) {
  Observation out = obs;
  for (auto& d : out.density) d = static_cast<float>(d);
  for (auto& p : out.phase) p = detail::stored_phase(p);
  return out;
}

/// Runs the full pipeline for grid point `index` of the manifest.
inline Sample make_sample(const DatasetManifest& manifest,
                          const PhysicalLabels& labels, std::size_t index) {
  const auto medium =
      manifest.scenario.medium(labels[kN2], labels[kIsat], labels[kAlpha]);
  Sample s;
  s.index = index;
  s.labels_physical = labels;
  s.labels_normalized = normalize_labels(labels, manifest.ranges);
  try {
    s.observation = simulate_observation(manifest.scenario, medium);
  } catch (const BlowUp& e) {
    throw SampleError(index, true, e.what());
  }
  if (manifest.noise.any_enabled()) {
    auto rng = sample_stream(manifest.master_seed, index);
    s.observation = add_noise(s.observation, manifest.noise, rng);
  }
  s.observation = quantize(s.observation);
  return s;
}

/// Seeded shuffle of [0, N) cut into contiguous train/validation/test
/// slices. Validation and test get floor(f N); training takes the rest.
/// Each list is returned sorted.
inline SplitAssignment split_indices(std::size_t n,
                                     const std::array<double, 3>& fractions,
                                     std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0) || !std::isfinite(f))
      throw InvalidArgument("split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidArgument("split fractions must sum to 1");

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  RandomStream rng(splitmix64(seed));
  for (std::size_t i = n; i > 1; --i)
    std::swap(perm[i - 1], perm[uniform_below(rng, i)]);

  // The relative nudge keeps products like 0.1 * 125000 from flooring low.
  auto floor_count = [n](double f) {
    return static_cast<std::size_t>(
        std::floor(f * static_cast<double>(n) * (1.0 + 1e-12)));
  };
  const std::size_t n_val = floor_count(fractions[1]);
  const std::size_t n_test = floor_count(fractions[2]);
  const std::size_t n_train = n - n_val - n_test;

  SplitAssignment out;
  out.seed = seed;
  out.fractions = fractions;
  out.train.assign(perm.begin(), perm.begin() + n_train);
  out.validation.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  out.test.assign(perm.begin() + n_train + n_val, perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// Returns `manifest` with freshly assigned split index lists.
inline DatasetManifest split(DatasetManifest manifest,
                             const std::array<double, 3>& fractions,
                             std::uint64_t seed) {
  manifest.split = split_indices(manifest.sample_count, fractions, seed);
  return manifest;
}

/// Read access to a dataset directory. Observations are read on demand, so
/// a directory holding only manifest and labels is enough for evaluation.
class DatasetReader {
 public:
  explicit DatasetReader(std::filesystem::path dir)
      : dir_(std::move(dir)), manifest_(read_manifest(dir_ / kManifestFile)) {
    std::ifstream in(dir_ / kLabelsFile, std::ios::binary);
    if (!in) throw IoError("cannot open " + (dir_ / kLabelsFile).string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() != manifest_.sample_count * kLabelRecordBytes)
      throw FormatError(std::string(kLabelsFile) + " has " +
                        std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(manifest_.sample_count * kLabelRecordBytes));
    labels_.resize(manifest_.sample_count);
    for (std::size_t i = 0; i < labels_.size(); ++i)
      for (std::size_t a = 0; a < 3; ++a)
        labels_[i][a] =
            detail::get_le<double>(bytes.data() + i * kLabelRecordBytes + 8 * a);
  }

  const DatasetManifest& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& directory() const noexcept { return dir_; }
  std::size_t size() const noexcept { return labels_.size(); }

  const PhysicalLabels& labels(std::size_t index) const {
    check(index);
    return labels_[index];
  }

  NormalizedLabels normalized_labels(std::size_t index) const {
    return normalize_labels(labels(index), manifest_.ranges);
  }

  Observation observation(std::size_t index) const {
    check(index);
    const auto path = dir_ / kObservationsFile;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> record(kObservationRecordBytes);
    in.seekg(static_cast<std::streamoff>(index * kObservationRecordBytes));
    in.read(reinterpret_cast<char*>(record.data()),
            static_cast<std::streamsize>(record.size()));
    if (!in) throw FormatError("short read of record " + std::to_string(index));
    return decode_observation(record.data());
  }

  Sample sample(std::size_t index) const {
    return {index, observation(index), labels(index), normalized_labels(index)};
  }

 private:
  void check(std::size_t index) const {
    if (index >= labels_.size())
      throw InvalidArgument("sample index " + std::to_string(index) +
                            " is out of range (dataset has " +
                            std::to_string(labels_.size()) + ")");
  }

  std::filesystem::path dir_;
  DatasetManifest manifest_;
  std::vector<PhysicalLabels> labels_;
};

struct GenerateOptions {
  std::size_t threads = 1;
  /// Called after each record is written with (records done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Generates every grid sample of `manifest` into `out_dir`.
///
/// Files are written into a sibling staging directory that is renamed into
/// place only after observations, labels and finally the manifest are
/// complete, so `out_dir` never holds a manifest without its data. The
/// manifest's split is (re)assigned from its own fractions and seed, and
/// the maximum stored density is recorded. Returns the written manifest.
inline DatasetManifest generate(DatasetManifest manifest,
                                const std::filesystem::path& out_dir,
                                const GenerateOptions& options = {}) {
  namespace fs = std::filesystem;
  manifest.sample_count = manifest.ranges.total();
  manifest.validate();
  const auto grid = enumerate_grid(manifest.ranges);
  const std::size_t n = grid.size();

  std::error_code ec;
  if (fs::exists(out_dir, ec) &&
      !(fs::is_directory(out_dir, ec) && fs::is_empty(out_dir, ec)))
    throw IoError(out_dir.string() + " already exists and is not an empty directory");

  auto target = fs::absolute(out_dir).lexically_normal();
  if (target.filename().empty()) target = target.parent_path();
  const auto staging =
      target.parent_path() / ("." + target.filename().string() + ".partial");
  fs::remove_all(staging, ec);
  if (!fs::create_directories(staging, ec) || ec)
    throw IoError("cannot create " + staging.string() +
                  (ec ? ": " + ec.message() : std::string()));

  try {
    std::ofstream obs_out(staging / kObservationsFile, std::ios::binary);
    std::ofstream lab_out(staging / kLabelsFile, std::ios::binary);
    if (!obs_out || !lab_out) throw IoError("cannot open data files in " + staging.string());

    const std::size_t threads = std::max<std::size_t>(1, options.threads);
    const std::size_t batch = threads * 2;
    std::vector<Sample> slots(batch);
    double density_max = 0.0;

    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      auto worker = [&] {
        for (std::size_t k; (k = next++) < count;) {
          try {
            slots[k] = make_sample(manifest, grid[start + k], start + k);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      };
      if (threads == 1) {
        worker();
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
      }
      if (failure) std::rethrow_exception(failure);

      for (std::size_t k = 0; k < count; ++k) {
        const auto& s = slots[k];
        density_max = std::max(density_max, s.observation.peak_density());
        const auto obs_bytes = encode_observation(s.observation);
        const auto lab_bytes = encode_labels(s.labels_physical);
        obs_out.write(reinterpret_cast<const char*>(obs_bytes.data()),
                      static_cast<std::streamsize>(obs_bytes.size()));
        lab_out.write(reinterpret_cast<const char*>(lab_bytes.data()),
                      static_cast<std::streamsize>(lab_bytes.size()));
        if (!obs_out || !lab_out)
          throw IoError("write failed at sample " + std::to_string(s.index));
        if (options.progress) options.progress(start + k + 1, n);
      }
    }
    obs_out.close();
    lab_out.close();
    if (!obs_out || !lab_out) throw IoError("failed to flush data files");

    manifest = split(std::move(manifest), manifest.split.fractions, manifest.split.seed);
    manifest.density_max = density_max;
    write_manifest(manifest, staging / kManifestFile);

    if (fs::exists(out_dir)) fs::remove(out_dir);
    fs::rename(staging, out_dir);
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(staging, ec);
    throw IoError(e.what());
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
  return manifest;
}

/// Re-splits an existing dataset in place (manifest only).
inline DatasetManifest split_dataset(const std::filesystem::path& dir,
                                     const std::array<double, 3>& fractions,
                                     std::uint64_t seed) {
  auto manifest = read_manifest(dir / kManifestFile);
  manifest = split(std::move(manifest), fractions, seed);
  write_manifest(manifest, dir / kManifestFile);
  return manifest;
}

}  // namespace nlse
