#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>

#include "nlse/error.hpp"

namespace nlse {

namespace detail {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

/// Owning SIMD-aligned buffer of complex doubles.
class AlignedBuffer {
 public:
  explicit AlignedBuffer(std::size_t n)
      : size_(n),
        data_(static_cast<std::complex<double>*>(
            fftw_malloc(sizeof(std::complex<double>) * n))) {
    if (!data_) throw std::bad_alloc();
  }

  std::complex<double>* data() noexcept { return data_.get(); }
  const std::complex<double>* data() const noexcept { return data_.get(); }
  std::size_t size() const noexcept { return size_; }
  std::span<std::complex<double>> span() noexcept { return {data(), size_}; }

 private:
  std::size_t size_;
  std::unique_ptr<std::complex<double>, FftwFree> data_;
};

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  PlanPair() = default;
  PlanPair(const PlanPair&) = delete;
  PlanPair& operator=(const PlanPair&) = delete;
  ~PlanPair() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. FFTW_ESTIMATE keeps the chosen algorithm, and therefore the
// rounding, independent of timing.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline std::shared_ptr<const PlanPair> cached_plans(std::size_t nx,
                                                    std::size_t ny) {
  static std::map<std::pair<std::size_t, std::size_t>,
                  std::shared_ptr<const PlanPair>>
      cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find({nx, ny});
  if (it != cache.end()) return it->second;

  AlignedBuffer scratch(nx * ny);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  auto plans = std::make_shared<PlanPair>();
  plans->forward = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx),
                                    buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  plans->backward = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx),
                                     buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!plans->forward || !plans->backward)
    throw Error("FFTW failed to create a plan");
  cache.emplace(std::pair{nx, ny}, plans);
  return plans;
}

}  // namespace detail

/// In-place 2D FFT on row-major ny x nx data with orthonormal scaling
/// (1/sqrt(nx ny) in both directions), so Parseval holds literally.
///
/// Instances are cheap handles onto a process-wide plan cache and may be
/// used concurrently from several threads.
class Fft2d {
 public:
  Fft2d(std::size_t nx, std::size_t ny)
      : nx_(nx), ny_(ny), plans_(detail::cached_plans(nx, ny)) {}

  std::size_t size() const noexcept { return nx_ * ny_; }
  double scale() const noexcept {
    return 1.0 / std::sqrt(static_cast<double>(size()));
  }

  void forward(std::span<std::complex<double>> data) const {
    execute(plans_->forward, data, scale());
  }
  void backward(std::span<std::complex<double>> data) const {
    execute(plans_->backward, data, scale());
  }

  /// Unnormalized transforms on an fftw_malloc-aligned buffer of size().
  void forward_raw(detail::AlignedBuffer& buf) const {
    run(plans_->forward, buf.data());
  }
  void backward_raw(detail::AlignedBuffer& buf) const {
    run(plans_->backward, buf.data());
  }

 private:
  static void run(fftw_plan plan, std::complex<double>* p) {
    auto* f = reinterpret_cast<fftw_complex*>(p);
    fftw_execute_dft(plan, f, f);
  }

  void execute(fftw_plan plan, std::span<std::complex<double>> data,
               double s) const {
    if (data.size() != size())
      throw InvalidArgument("FFT buffer size does not match the plan");
    if (fftw_alignment_of(reinterpret_cast<double*>(data.data())) == 0) {
      run(plan, data.data());
    } else {
      detail::AlignedBuffer tmp(size());
      std::copy(data.begin(), data.end(), tmp.data());
      run(plan, tmp.data());
      std::copy(tmp.data(), tmp.data() + size(), data.begin());
    }
    for (auto& v : data) v *= s;
  }

  std::size_t nx_;
  std::size_t ny_;
  std::shared_ptr<const detail::PlanPair> plans_;
};

}  // namespace nlse
