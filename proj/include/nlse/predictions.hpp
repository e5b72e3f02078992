#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "nlse/error.hpp"
#include "nlse/regression.hpp"

namespace nlse {

inline constexpr std::string_view kPredictionsHeader =
    "index,n2_pred,isat_pred,alpha_pred,n2_true,isat_true,alpha_true";

/// One row of the predictions exchange file; all values normalized.
struct PredictionRow {
  std::size_t index = 0;
  Vec3 prediction{};
  Vec3 truth{};
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw FormatError("line " + std::to_string(line) + ": cannot parse '" +
                      std::string(field) + "'");
  return value;
}

}  // namespace detail

/// Parses the exchange CSV. Truths must lie in [0,1] (within 1e-9);
/// predictions only need to be finite.
inline std::vector<PredictionRow> read_predictions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("predictions file is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (detail::trim(line) != kPredictionsHeader)
    throw FormatError("unexpected predictions header: '" + line + "'");

  std::vector<PredictionRow> rows;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (detail::trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 7)
      throw FormatError("line " + std::to_string(lineno) + ": expected 7 fields, got " +
                        std::to_string(fields.size()));
    PredictionRow row;
    row.index = detail::parse_number<std::size_t>(fields[0], lineno);
    for (std::size_t a = 0; a < 3; ++a) {
      row.prediction[a] = detail::parse_number<double>(fields[1 + a], lineno);
      row.truth[a] = detail::parse_number<double>(fields[4 + a], lineno);
      if (!std::isfinite(row.prediction[a]) || !std::isfinite(row.truth[a]))
        throw FormatError("line " + std::to_string(lineno) + ": non-finite value");
      if (row.truth[a] < -1e-9 || row.truth[a] > 1.0 + 1e-9)
        throw FormatError("line " + std::to_string(lineno) +
                          ": truth outside the normalized range [0,1]");
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<PredictionRow> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_predictions(in);
}

inline void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows) {
  out << kPredictionsHeader << '\n';
  char buf[32];
  for (const auto& r : rows) {
    out << r.index;
    for (double v : r.prediction) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    for (double v : r.truth) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline void write_predictions(const std::filesystem::path& path,
                              const std::vector<PredictionRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_predictions(out, rows);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace nlse
