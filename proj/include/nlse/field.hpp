#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nlse/error.hpp"

namespace nlse {

using Complex = std::complex<double>;

/// Uniform periodic transverse sampling. Sample (i, j) sits at
/// x = (i - nx/2) dx, y = (j - ny/2) dy so the grid center is a sample.
class TransverseGrid {
 public:
  TransverseGrid() = default;

  TransverseGrid(std::size_t nx, std::size_t ny, double window_x,
                 double window_y)
      : nx_(nx), ny_(ny), window_x_(window_x), window_y_(window_y) {
    if (nx == 0 || ny == 0)
      throw InvalidArgument("grid sample counts must be positive");
    if (!(window_x > 0.0) || !(window_y > 0.0) || !std::isfinite(window_x) ||
        !std::isfinite(window_y))
      throw InvalidArgument("grid window must be finite and positive");
  }

  static TransverseGrid square(std::size_t n, double window) {
    return {n, n, window, window};
  }

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return nx_ * ny_; }
  double window_x() const noexcept { return window_x_; }
  double window_y() const noexcept { return window_y_; }
  double dx() const noexcept { return window_x_ / static_cast<double>(nx_); }
  double dy() const noexcept { return window_y_ / static_cast<double>(ny_); }
  double cell_area() const noexcept { return dx() * dy(); }

  double x(std::size_t i) const noexcept {
    return (static_cast<double>(i) - static_cast<double>(nx_ / 2)) * dx();
  }
  double y(std::size_t j) const noexcept {
    return (static_cast<double>(j) - static_cast<double>(ny_ / 2)) * dy();
  }

  /// Angular spatial frequency in standard FFT ordering (rad/m).
  double kx(std::size_t i) const noexcept { return fft_frequency(i, nx_, dx()); }
  double ky(std::size_t j) const noexcept { return fft_frequency(j, ny_, dy()); }

  /// Grid with the same window and `factor`-times fewer samples per axis.
  TransverseGrid coarsened(std::size_t factor) const {
    if (factor == 0 || nx_ % factor != 0 || ny_ % factor != 0)
      throw InvalidArgument("grid of " + std::to_string(nx_) + "x" +
                            std::to_string(ny_) + " is not divisible by " +
                            std::to_string(factor));
    return {nx_ / factor, ny_ / factor, window_x_, window_y_};
  }

  friend bool operator==(const TransverseGrid&, const TransverseGrid&) = default;

 private:
  static double fft_frequency(std::size_t i, std::size_t n, double d) noexcept {
    const auto signed_index = i < (n + 1) / 2
                                  ? static_cast<double>(i)
                                  : static_cast<double>(i) - static_cast<double>(n);
    return 2.0 * std::numbers::pi * signed_index / (static_cast<double>(n) * d);
  }

  std::size_t nx_ = 1;
  std::size_t ny_ = 1;
  double window_x_ = 1.0;
  double window_y_ = 1.0;
};

/// Complex envelope on a transverse grid, normalized so |psi|^2 is the
/// optical intensity in W/m^2. Storage is row-major: values[j * nx + i].
class ComplexField {
 public:
  ComplexField() = default;

  explicit ComplexField(TransverseGrid grid, Complex fill = {})
      : grid_(grid), values_(grid.size(), fill) {}

  ComplexField(TransverseGrid grid, std::vector<Complex> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw InvalidArgument("field value count does not match its grid");
  }

  const TransverseGrid& grid() const noexcept { return grid_; }
  std::span<Complex> values() noexcept { return values_; }
  std::span<const Complex> values() const noexcept { return values_; }

  Complex& operator()(std::size_t i, std::size_t j) noexcept {
    return values_[j * grid_.nx() + i];
  }
  const Complex& operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[j * grid_.nx() + i];
  }

  /// Total power in W: sum of |psi|^2 dx dy.
  double power() const noexcept {
    double sum = 0.0;
    for (const auto& v : values_) sum += std::norm(v);
    return sum * grid_.cell_area();
  }

  bool all_finite() const noexcept {
    for (const auto& v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  ComplexField& operator*=(Complex c) noexcept {
    for (auto& v : values_) v *= c;
    return *this;
  }

 private:
  TransverseGrid grid_;
  std::vector<Complex> values_;
};

struct BeamParams {
  double power = 2.1;          // W
  double waist = 1.7e-3;       // m, 1/e^2 intensity radius
  double wavelength = 780e-9;  // m

  double k0() const noexcept { return 2.0 * std::numbers::pi / wavelength; }

  void validate() const {
    if (!(power > 0.0) || !(waist > 0.0) || !(wavelength > 0.0) ||
        !std::isfinite(power) || !std::isfinite(waist) ||
        !std::isfinite(wavelength))
      throw InvalidArgument("beam power, waist and wavelength must be positive");
  }
};

/// Medium coefficients: the estimation target (n2, i_sat, alpha) and the
/// background index n0.
struct MediumParams {
  double n2 = -5.5e-10;   // m^2/W
  double i_sat = 5.25e5;  // W/m^2
  double alpha = 21.5;    // 1/m
  double n0 = 1.0;

  void validate() const {
    if (!(i_sat > 0.0) || !std::isfinite(i_sat))
      throw InvalidArgument("saturation intensity must be positive");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
      throw InvalidArgument("absorption coefficient must be non-negative");
    if (!(n0 >= 1.0) || !std::isfinite(n0))
      throw InvalidArgument("background index must be >= 1");
    if (!std::isfinite(n2)) throw InvalidArgument("n2 must be finite");
  }
};

struct PropagationConfig {
  double length = 0.2;       // m
  std::size_t n_steps = 200;

  double dz() const noexcept { return length / static_cast<double>(n_steps); }

  void validate() const {
    if (n_steps == 0) throw InvalidArgument("n_steps must be >= 1");
    if (!(length > 0.0) || !std::isfinite(length))
      throw InvalidArgument("propagation length must be positive");
  }
};

/// Minimum ratio of window to waist accepted by gaussian_input.
inline constexpr double kMinWindowOverWaist = 8.0;

/// Collimated Gaussian beam centered on the grid:
/// psi(r) = sqrt(2P / (pi w^2)) exp(-r^2 / w^2).
inline ComplexField gaussian_input(const BeamParams& beam,
                                   const TransverseGrid& grid) {
  beam.validate();
  if (grid.window_x() < kMinWindowOverWaist * beam.waist ||
      grid.window_y() < kMinWindowOverWaist * beam.waist)
    throw WindowTooSmall("window must span at least 8 waists on each axis");

  const double amplitude =
      std::sqrt(2.0 * beam.power / (std::numbers::pi * beam.waist * beam.waist));
  const double inv_w2 = 1.0 / (beam.waist * beam.waist);
  ComplexField field(grid);
  for (std::size_t j = 0; j < grid.ny(); ++j) {
    const double y = grid.y(j);
    for (std::size_t i = 0; i < grid.nx(); ++i) {
      const double x = grid.x(i);
      field(i, j) = amplitude * std::exp(-(x * x + y * y) * inv_w2);
    }
  }
  return field;
}

}  // namespace nlse
