#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nlse/error.hpp"

namespace nlse {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

/// Floor added to every softplus-activated Cholesky diagonal entry.
inline constexpr double kCholeskyEpsilon = 1e-6;

/// log(1 + e^x) without overflow.
inline double softplus(double x) noexcept {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double inverse_softplus(double y) {
  if (!(y > 0.0)) throw InvalidArgument("inverse_softplus needs y > 0");
  return y > 30.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

inline double logistic(double x) noexcept {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

/// Predicted mean and covariance Sigma = L L^T of a normalized triplet.
///
/// `chol` packs L as {d0, d1, d2, l10, l20, l21}: the three diagonal
/// entries are raw values mapped through softplus(x) + 1e-6, the three
/// strictly-lower entries are used as is. Every parameter vector therefore
/// yields a symmetric positive definite Sigma.
struct GaussianPrediction {
  Vec3 mean{};
  std::array<double, 6> chol{};

  Mat3 factor() const noexcept {
    Mat3 l{};
    for (std::size_t i = 0; i < 3; ++i) l[i][i] = softplus(chol[i]) + kCholeskyEpsilon;
    l[1][0] = chol[3];
    l[2][0] = chol[4];
    l[2][1] = chol[5];
    return l;
  }

  Mat3 covariance() const noexcept {
    const auto l = factor();
    Mat3 s{};
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k) s[i][j] += l[i][k] * l[j][k];
    return s;
  }

  /// Parameters reproducing a given symmetric positive definite covariance.
  static GaussianPrediction from_covariance(const Vec3& mean, const Mat3& sigma) {
    Mat3 l{};
    for (std::size_t j = 0; j < 3; ++j) {
      double d = sigma[j][j];
      for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
      if (!(d > 0.0)) throw InvalidArgument("covariance is not positive definite");
      l[j][j] = std::sqrt(d);
      for (std::size_t i = j + 1; i < 3; ++i) {
        double v = sigma[i][j];
        for (std::size_t k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
        l[i][j] = v / l[j][j];
      }
    }
    GaussianPrediction p;
    p.mean = mean;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(l[i][i] > kCholeskyEpsilon))
        throw InvalidArgument("Cholesky diagonal below the representable floor");
      p.chol[i] = inverse_softplus(l[i][i] - kCholeskyEpsilon);
    }
    p.chol[3] = l[1][0];
    p.chol[4] = l[2][0];
    p.chol[5] = l[2][1];
    return p;
  }
};

namespace detail {

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " is not finite");
}

/// z = L^{-1} r for lower-triangular L.
inline Vec3 forward_solve(const Mat3& l, const Vec3& r) noexcept {
  Vec3 z{};
  for (std::size_t i = 0; i < 3; ++i) {
    double v = r[i];
    for (std::size_t k = 0; k < i; ++k) v -= l[i][k] * z[k];
    z[i] = v / l[i][i];
  }
  return z;
}

/// w = L^{-T} z for lower-triangular L.
inline Vec3 backward_solve_transposed(const Mat3& l, const Vec3& z) noexcept {
  Vec3 w{};
  for (std::size_t ii = 3; ii-- > 0;) {
    double v = z[ii];
    for (std::size_t k = ii + 1; k < 3; ++k) v -= l[k][ii] * w[k];
    w[ii] = v / l[ii][ii];
  }
  return w;
}

inline void check_prediction(const Vec3& x, const GaussianPrediction& pred) {
  require_finite(x, "target");
  require_finite(pred.mean, "predicted mean");
  require_finite(pred.chol, "covariance parameters");
}

}  // namespace detail

/// Multivariate Gaussian negative log-likelihood of `x` (d = 3):
/// 0.5 (x-mu)^T Sigma^{-1} (x-mu) + 0.5 log|Sigma| + 1.5 log(2 pi),
/// evaluated through the Cholesky factor.
inline double nll(const Vec3& x, const GaussianPrediction& pred) {
  detail::check_prediction(x, pred);
  const auto l = pred.factor();
  Vec3 r;
  for (std::size_t i = 0; i < 3; ++i) r[i] = x[i] - pred.mean[i];
  const auto z = detail::forward_solve(l, r);
  double half_logdet = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(l[i][i] >= kCholeskyEpsilon)) throw Error("degenerate Cholesky factor");
    half_logdet += std::log(l[i][i]);
  }
  const double mahalanobis = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
  return 0.5 * mahalanobis + half_logdet + 1.5 * std::log(2.0 * std::numbers::pi);
}

/// Mean nll over a batch.
inline double nll(std::span<const Vec3> x,
                  std::span<const GaussianPrediction> pred) {
  if (x.size() != pred.size() || x.empty())
    throw InvalidArgument("nll batch needs equal, non-zero lengths");
  double sum = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) sum += nll(x[n], pred[n]);
  return sum / static_cast<double>(x.size());
}

/// Gradient layout: {mu0, mu1, mu2, d0, d1, d2, l10, l20, l21}, matching
/// GaussianPrediction::mean followed by GaussianPrediction::chol.
using PredictionGradient = std::array<double, 9>;

inline PredictionGradient nll_gradient(const Vec3& x,
                                       const GaussianPrediction& pred) {
  detail::check_prediction(x, pred);
  const auto l = pred.factor();
  Vec3 r;
  for (std::size_t i = 0; i < 3; ++i) r[i] = x[i] - pred.mean[i];
  const auto z = detail::forward_solve(l, r);
  const auto w = detail::backward_solve_transposed(l, z);  // Sigma^{-1} r

  // d/dL of the Mahalanobis half is -(L^{-T} z) z^T on the lower triangle.
  PredictionGradient g{};
  for (std::size_t i = 0; i < 3; ++i) g[i] = -w[i];
  for (std::size_t i = 0; i < 3; ++i)
    g[3 + i] = (-w[i] * z[i] + 1.0 / l[i][i]) * logistic(pred.chol[i]);
  g[6] = -w[1] * z[0];
  g[7] = -w[2] * z[0];
  g[8] = -w[2] * z[1];
  return g;
}

inline std::array<double, 9> pack(const GaussianPrediction& p) noexcept {
  return {p.mean[0], p.mean[1], p.mean[2], p.chol[0], p.chol[1],
          p.chol[2], p.chol[3], p.chol[4], p.chol[5]};
}

inline GaussianPrediction unpack(const std::array<double, 9>& v) noexcept {
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5], v[6], v[7], v[8]}};
}

/// Central finite differences of nll against a caller-supplied gradient.
/// Returns max_i |g_i - fd_i| / max(max_i |fd_i|, max_i |g_i|, 1e-12).
inline double nll_gradient_check(const GaussianPrediction& pred, const Vec3& x,
                                 double h, const PredictionGradient& analytic) {
  if (!(h >= 1e-7 && h <= 1e-3))
    throw InvalidArgument("finite-difference step must lie in [1e-7, 1e-3]");
  const auto base = pack(pred);
  PredictionGradient fd{};
  for (std::size_t i = 0; i < 9; ++i) {
    auto plus = base, minus = base;
    plus[i] += h;
    minus[i] -= h;
    fd[i] = (nll(x, unpack(plus)) - nll(x, unpack(minus))) / (2.0 * h);
  }
  double scale = 1e-12, worst = 0.0;
  for (std::size_t i = 0; i < 9; ++i) {
    scale = std::max({scale, std::abs(fd[i]), std::abs(analytic[i])});
    worst = std::max(worst, std::abs(fd[i] - analytic[i]));
  }
  return worst / scale;
}

inline double nll_gradient_check(const GaussianPrediction& pred, const Vec3& x,
                                 double h) {
  return nll_gradient_check(pred, x, h, nll_gradient(x, pred));
}

/// Regression quality per parameter, in normalized label space.
struct MetricsReport {
  Vec3 mae_percent{};  // 100 * mean |pred - truth|
  Vec3 r2{};           // NaN where the truths have zero variance
  std::array<bool, 3> r2_defined{};
  Vec3 sigma{};        // sample standard deviation of residuals
  double mae_percent_aggregate = 0.0;
  double r2_aggregate = 0.0;  // mean of the per-axis values; NaN if any is undefined
  std::size_t count = 0;
};

inline MetricsReport metrics(std::span<const Vec3> preds,
                             std::span<const Vec3> truths) {
  if (preds.size() != truths.size())
    throw InvalidArgument("metrics: prediction and truth counts differ");
  if (preds.size() < 2) throw InvalidArgument("metrics needs at least 2 samples");
  const auto n = static_cast<double>(preds.size());

  MetricsReport rep;
  rep.count = preds.size();
  for (std::size_t a = 0; a < 3; ++a) {
    double truth_mean = 0.0, resid_mean = 0.0, abs_sum = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
      const double e = preds[k][a] - truths[k][a];
      if (!std::isfinite(e)) throw InvalidArgument("metrics input is not finite");
      truth_mean += truths[k][a];
      resid_mean += e;
      abs_sum += std::abs(e);
    }
    truth_mean /= n;
    resid_mean /= n;
    double ss_res = 0.0, ss_tot = 0.0, ss_dev = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
      const double e = preds[k][a] - truths[k][a];
      ss_res += e * e;
      ss_tot += (truths[k][a] - truth_mean) * (truths[k][a] - truth_mean);
      ss_dev += (e - resid_mean) * (e - resid_mean);
    }
    rep.mae_percent[a] = 100.0 * abs_sum / n;
    rep.sigma[a] = std::sqrt(ss_dev / (n - 1.0));
    rep.r2_defined[a] = ss_tot > 0.0;
    rep.r2[a] = rep.r2_defined[a] ? 1.0 - ss_res / ss_tot
                                  : std::numeric_limits<double>::quiet_NaN();
  }
  rep.mae_percent_aggregate =
      (rep.mae_percent[0] + rep.mae_percent[1] + rep.mae_percent[2]) / 3.0;
  rep.r2_aggregate = (rep.r2[0] + rep.r2[1] + rep.r2[2]) / 3.0;
  return rep;
}

struct TrendBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  bool empty = true;
  double mean_truth = 0.0;
  double mean_prediction = 0.0;
  double sigma = 0.0;  // residual standard deviation, 0 for fewer than 2 samples
};

/// Equal-width binning of one axis on [0, 1] by truth value.
inline std::vector<TrendBin> binned_trend(std::span<const double> preds,
                                          std::span<const double> truths,
                                          std::size_t n_bins) {
  if (n_bins < 2) throw InvalidArgument("binned_trend needs at least 2 bins");
  if (preds.size() != truths.size())
    throw InvalidArgument("binned_trend: prediction and truth counts differ");

  std::vector<TrendBin> bins(n_bins);
  std::vector<std::vector<std::size_t>> members(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lower = static_cast<double>(b) / static_cast<double>(n_bins);
    bins[b].upper = static_cast<double>(b + 1) / static_cast<double>(n_bins);
  }
  for (std::size_t k = 0; k < truths.size(); ++k) {
    const double t = std::clamp(truths[k], 0.0, 1.0);
    auto b = static_cast<std::size_t>(t * static_cast<double>(n_bins));
    members[std::min(b, n_bins - 1)].push_back(k);
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = bins[b];
    bin.count = members[b].size();
    bin.empty = bin.count == 0;
    if (bin.empty) continue;
    double resid_mean = 0.0;
    for (auto k : members[b]) {
      bin.mean_truth += truths[k];
      bin.mean_prediction += preds[k];
      resid_mean += preds[k] - truths[k];
    }
    const auto c = static_cast<double>(bin.count);
    bin.mean_truth /= c;
    bin.mean_prediction /= c;
    resid_mean /= c;
    if (bin.count >= 2) {
      double ss = 0.0;
      for (auto k : members[b]) {
        const double d = preds[k] - truths[k] - resid_mean;
        ss += d * d;
      }
      bin.sigma = std::sqrt(ss / (c - 1.0));
    }
  }
  return bins;
}

}  // namespace nlse
