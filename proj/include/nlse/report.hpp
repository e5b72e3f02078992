#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlse/dataset.hpp"
#include "nlse/error.hpp"
#include "nlse/labels.hpp"
#include "nlse/predictions.hpp"
#include "nlse/regression.hpp"

namespace nlse {

/// Largest accepted gap between a CSV truth and the dataset's label.
inline constexpr double kTruthMismatchTolerance = 1e-6;

inline nlohmann::json to_json(const MetricsReport& rep) {
  using nlohmann::json;
  auto per_axis = [](const Vec3& v, const std::array<bool, 3>* defined = nullptr) {
    json j;
    for (std::size_t a = 0; a < 3; ++a)
      j[kAxisNames[a]] = (defined && !(*defined)[a]) ? json() : json(v[a]);
    return j;
  };
  json defined;
  for (std::size_t a = 0; a < 3; ++a) defined[kAxisNames[a]] = rep.r2_defined[a];
  const bool all_defined = rep.r2_defined[0] && rep.r2_defined[1] && rep.r2_defined[2];
  return {{"count", rep.count},
          {"mae_percent", per_axis(rep.mae_percent)},
          {"r2", per_axis(rep.r2, &rep.r2_defined)},
          {"r2_defined", defined},
          {"sigma", per_axis(rep.sigma)},
          {"mae_percent_aggregate", rep.mae_percent_aggregate},
          {"r2_aggregate", all_defined ? json(rep.r2_aggregate) : json()}};
}

/// Orders rows by sample index and checks each truth against the dataset
/// labels. Row order in the file therefore cannot influence the metrics.
inline std::vector<PredictionRow> resolve_predictions(std::vector<PredictionRow> rows,
                                                      const DatasetReader& dataset) {
  std::sort(rows.begin(), rows.end(),
            [](const PredictionRow& l, const PredictionRow& r) { return l.index < r.index; });
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0 && rows[k].index == rows[k - 1].index)
      throw FormatError("duplicate prediction for sample " + std::to_string(rows[k].index));
    if (rows[k].index >= dataset.size())
      throw FormatError("sample index " + std::to_string(rows[k].index) +
                        " is not in the dataset");
    const auto truth = dataset.normalized_labels(rows[k].index);
    for (std::size_t a = 0; a < 3; ++a)
      if (std::abs(truth[a] - rows[k].truth[a]) > kTruthMismatchTolerance)
        throw FormatError("sample " + std::to_string(rows[k].index) + ": CSV truth for " +
                          kAxisNames[a] + " disagrees with the dataset label " +
                          "(wrong split or dataset?)");
  }
  return rows;
}

inline MetricsReport evaluate(const std::vector<PredictionRow>& rows) {
  std::vector<Vec3> preds, truths;
  preds.reserve(rows.size());
  truths.reserve(rows.size());
  for (const auto& r : rows) {
    preds.push_back(r.prediction);
    truths.push_back(r.truth);
  }
  return metrics(preds, truths);
}

namespace detail {

struct PlotFrame {
  double left = 70, top = 40, size = 480;
  double lo = -0.05, hi = 1.05;

  double px(double v) const { return left + (v - lo) / (hi - lo) * size; }
  double py(double v) const { return top + size - (v - lo) / (hi - lo) * size; }
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string band(const PlotFrame& f, double half_width, const char* cls,
                        const char* fill, double opacity) {
  const double lo = f.lo, hi = f.hi;
  auto clampv = [&](double v) { return std::clamp(v, lo, hi); };
  std::ostringstream s;
  s << "<polygon class=\"" << cls << "\" fill=\"" << fill << "\" fill-opacity=\""
    << opacity << "\" points=\"";
  s << fmt(f.px(lo)) << ',' << fmt(f.py(clampv(lo + half_width))) << ' ';
  s << fmt(f.px(hi)) << ',' << fmt(f.py(clampv(hi + half_width))) << ' ';
  s << fmt(f.px(hi)) << ',' << fmt(f.py(clampv(hi - half_width))) << ' ';
  s << fmt(f.px(lo)) << ',' << fmt(f.py(clampv(lo - half_width)));
  s << "\"/>\n";
  return s.str();
}

}  // namespace detail

/// Predicted-versus-true SVG for one axis: shaded 4 sigma and 1 sigma bands
/// around the dashed identity line, one dot per sample, and circles on the
/// binned mean prediction.
inline std::string prediction_plot_svg(const std::vector<PredictionRow>& rows,
                                       std::size_t axis, double sigma,
                                       std::size_t n_bins = 20) {
  const detail::PlotFrame f;
  std::vector<double> preds, truths;
  for (const auto& r : rows) {
    preds.push_back(r.prediction[axis]);
    truths.push_back(r.truth[axis]);
  }
  const auto bins = binned_trend(preds, truths, n_bins);

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"580\" height=\"580\" "
       "viewBox=\"0 0 580 580\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"580\" height=\"580\" fill=\"white\"/>\n";
  s << detail::band(f, 4.0 * sigma, "band-4sigma", "#9ecae1", 0.4);
  s << detail::band(f, sigma, "band-1sigma", "#3182bd", 0.5);
  s << "<line class=\"identity\" x1=\"" << detail::fmt(f.px(f.lo)) << "\" y1=\""
    << detail::fmt(f.py(f.lo)) << "\" x2=\"" << detail::fmt(f.px(f.hi)) << "\" y2=\""
    << detail::fmt(f.py(f.hi)) << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const double p = std::clamp(preds[k], f.lo, f.hi);
    s << "<circle class=\"sample\" cx=\"" << detail::fmt(f.px(truths[k])) << "\" cy=\""
      << detail::fmt(f.py(p)) << "\" r=\"1.2\" fill=\"#636363\" fill-opacity=\"0.4\"/>\n";
  }
  for (const auto& b : bins) {
    if (b.empty) continue;
    s << "<circle class=\"trend\" cx=\"" << detail::fmt(f.px(b.mean_truth)) << "\" cy=\""
      << detail::fmt(f.py(std::clamp(b.mean_prediction, f.lo, f.hi)))
      << "\" r=\"5\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";
  }
  s << "<rect x=\"" << f.left << "\" y=\"" << f.top << "\" width=\"" << f.size
    << "\" height=\"" << f.size << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = 0.25 * t;
    s << "<text x=\"" << detail::fmt(f.px(v)) << "\" y=\"" << f.top + f.size + 18
      << "\" font-size=\"12\" text-anchor=\"middle\">" << detail::fmt(v) << "</text>\n";
    s << "<text x=\"" << f.left - 8 << "\" y=\"" << detail::fmt(f.py(v) + 4)
      << "\" font-size=\"12\" text-anchor=\"end\">" << detail::fmt(v) << "</text>\n";
  }
  s << "<text x=\"" << f.left + f.size / 2 << "\" y=\"" << f.top + f.size + 36
    << "\" font-size=\"14\" text-anchor=\"middle\">true " << kAxisNames[axis]
    << " (normalized)</text>\n";
  s << "<text x=\"18\" y=\"" << f.top + f.size / 2 << "\" font-size=\"14\" "
    << "text-anchor=\"middle\" transform=\"rotate(-90 18 " << f.top + f.size / 2
    << ")\">predicted " << kAxisNames[axis] << "</text>\n";
  s << "<text x=\"" << f.left + f.size / 2 << "\" y=\"24\" font-size=\"14\" "
    << "text-anchor=\"middle\">" << kAxisNames[axis] << ": sigma = " << sigma
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

/// Writes pred_vs_true_<axis>.svg for each axis into `dir`.
inline std::vector<std::filesystem::path> write_prediction_plots(
    const std::vector<PredictionRow>& rows, const MetricsReport& report,
    const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (std::size_t a = 0; a < 3; ++a) {
    const auto path = dir / (std::string("pred_vs_true_") + kAxisNames[a] + ".svg");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << prediction_plot_svg(rows, a, report.sigma[a]);
    if (!out) throw IoError("failed writing " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace nlse
