#pragma once

// Loading of NAB-layout corpora: series CSVs, per-detector result CSVs and
// the anomaly-window label file.
//
// Corpus layout under a root directory:
//   data/<category>/<series>.csv                     timestamp,value
//   results/<detector>/<category>/<detector>_<series>.csv
//                                                    timestamp,value,anomaly_score,...
//   labels/combined_windows.json                     {"<category>/<series>.csv": [[start, end], ...]}

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "delayshare/errors.hpp"
#include "delayshare/games.hpp"
#include "delayshare/matrix.hpp"

namespace delayshare {

// Microseconds since 1970-01-01 00:00:00 (no time zone).
using Instant = std::int64_t;

namespace detail {

// Days since the epoch for a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

template <class Int>
bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, Int& out) {
  if (pos + len > s.size()) return false;
  const auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{} && p == s.data() + pos + len;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

} // namespace detail

// Parses "YYYY-MM-DD HH:MM:SS" with an optional ".ffffff" fraction.
inline std::optional<Instant> parse_timestamp(std::string_view text) {
  const auto s = detail::trim(text);
  std::int64_t y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' || s[16] != ':')
    return std::nullopt;
  if (!detail::parse_fixed(s, 0, 4, y) || !detail::parse_fixed(s, 5, 2, mo) || !detail::parse_fixed(s, 8, 2, d) ||
      !detail::parse_fixed(s, 11, 2, h) || !detail::parse_fixed(s, 14, 2, mi) || !detail::parse_fixed(s, 17, 2, se))
    return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 60) return std::nullopt;
  std::int64_t micro = 0;
  if (s.size() > 19) {
    if (s[19] != '.' || s.size() == 20 || s.size() > 26) return std::nullopt;
    const auto frac = s.substr(20);
    for (char c : frac)
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    detail::parse_fixed(frac, 0, frac.size(), micro);
    for (std::size_t i = frac.size(); i < 6; ++i) micro *= 10;
  }
  const std::int64_t days = detail::days_from_civil(y, mo, d);
  return ((days * 24 + h) * 60 + mi) * 60 * 1'000'000 + static_cast<std::int64_t>(se) * 1'000'000 + micro;
}

// "YYYY-MM-DD HH:MM:SS"; sub-second parts are dropped.
inline std::string format_timestamp(Instant t) {
  const std::int64_t secs = (t >= 0 ? t : t - 999'999) / 1'000'000;
  std::int64_t days = (secs >= 0 ? secs : secs - 86'399) / 86'400;
  const std::int64_t rem = secs - days * 86'400;
  std::int64_t y;
  unsigned m, d;
  detail::civil_from_days(days, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02lld:%02lld:%02lld", static_cast<long long>(y), m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw load_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  auto split = [](std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
      const auto pos = s.find(',', start);
      out.emplace_back(detail::trim(s.substr(start, pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    if (table.header.empty()) {
      table.header = split(line);
      continue;
    }
    table.rows.push_back(split(line));
    table.line_numbers.push_back(lineno);
  }
  if (table.header.empty()) throw load_error(path.string() + ": missing header");
  return table;
}

struct Series {
  std::string name;
  std::vector<Instant> timestamps;
  std::vector<double> values;
};

struct LabeledSeries {
  std::string name;
  std::vector<Instant> timestamps;
  std::vector<double> values;
  std::vector<Outcome> outcomes;
};

// Reads a `timestamp,value` CSV with strictly increasing timestamps.
inline Series load_series(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto ts_col = table.column("timestamp");
  const auto v_col = table.column("value");
  if (!ts_col || !v_col) throw load_error(path.string() + ": expected header timestamp,value");
  if (table.rows.empty()) throw load_error(path.string() + ": empty series");
  Series s;
  s.name = path.stem().string();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + ": row " + std::to_string(table.line_numbers[r]);
    if (row.size() <= std::max(*ts_col, *v_col)) throw load_error(where + ": too few columns");
    const auto ts = parse_timestamp(row[*ts_col]);
    if (!ts) throw load_error(where + ": unparseable timestamp '" + row[*ts_col] + "'");
    double v = 0.0;
    if (!detail::parse_double(row[*v_col], v)) throw load_error(where + ": unparseable value '" + row[*v_col] + "'");
    if (!s.timestamps.empty() && *ts <= s.timestamps.back())
      throw load_error(where + ": timestamp " + row[*ts_col] + " is not after the previous row");
    s.timestamps.push_back(*ts);
    s.values.push_back(v);
  }
  return s;
}

enum class FillPolicy { strict, ffill };

struct ExpertPanel {
  std::vector<std::string> detector_names;
  Matrix scores;  // L x N
};

// Assembles the score matrix in the declared detector order. Every series
// timestamp must appear in every detector file unless forward fill is
// requested, in which case a missing row repeats the detector's previous
// score (a missing first row is still an error).
inline ExpertPanel load_expert_scores(const std::vector<std::string>& detector_names,
                                      const std::vector<std::filesystem::path>& paths,
                                      const std::vector<Instant>& timestamps, FillPolicy fill = FillPolicy::strict) {
  if (detector_names.size() != paths.size()) throw dimension_error("one results file per detector is required");
  if (detector_names.empty()) throw config_error("at least one detector is required");
  ExpertPanel panel{detector_names, Matrix(timestamps.size(), detector_names.size())};
  for (std::size_t j = 0; j < paths.size(); ++j) {
    const auto table = read_csv(paths[j]);
    const auto ts_col = table.column("timestamp");
    const auto sc_col = table.column("anomaly_score");
    if (!ts_col || !sc_col) throw load_error(paths[j].string() + ": expected timestamp and anomaly_score columns");
    std::unordered_map<Instant, double> by_time;
    by_time.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      const std::string where = paths[j].string() + ": row " + std::to_string(table.line_numbers[r]);
      if (row.size() <= std::max(*ts_col, *sc_col)) throw load_error(where + ": too few columns");
      const auto ts = parse_timestamp(row[*ts_col]);
      if (!ts) throw load_error(where + ": unparseable timestamp '" + row[*ts_col] + "'");
      double v = 0.0;
      if (!detail::parse_double(row[*sc_col], v)) throw load_error(where + ": unparseable score '" + row[*sc_col] + "'");
      if (!(v >= 0.0 && v <= 1.0)) throw load_error(where + ": anomaly_score " + row[*sc_col] + " outside [0,1]");
      by_time[*ts] = v;
    }
    for (std::size_t t = 0; t < timestamps.size(); ++t) {
      const auto it = by_time.find(timestamps[t]);
      if (it != by_time.end()) {
        panel.scores(t, j) = it->second;
      } else if (fill == FillPolicy::ffill && t > 0) {
        panel.scores(t, j) = panel.scores(t - 1, j);
      } else {
        throw alignment_error("detector " + detector_names[j] + " has no score at " + format_timestamp(timestamps[t]));
      }
    }
  }
  return panel;
}

struct Window {
  Instant start = 0;
  Instant end = 0;
};

// 1 iff the timestamp falls in some closed window [start, end].
inline std::vector<Outcome> windows_to_outcomes(const std::vector<Window>& windows,
                                                const std::vector<Instant>& timestamps) {
  for (const auto& w : windows)
    if (w.start > w.end) throw load_error("anomaly window starts after it ends");
  std::vector<Window> sorted = windows;
  std::sort(sorted.begin(), sorted.end(), [](const Window& a, const Window& b) { return a.start < b.start; });
  std::vector<Outcome> y(timestamps.size(), 0);
  // Timestamps are increasing; sweep windows alongside.
  std::size_t w = 0;
  Instant reach = std::numeric_limits<Instant>::min();
  for (std::size_t t = 0; t < timestamps.size(); ++t) {
    while (w < sorted.size() && sorted[w].start <= timestamps[t]) reach = std::max(reach, sorted[w++].end);
    y[t] = timestamps[t] <= reach ? 1 : 0;
  }
  return y;
}

using WindowLabels = std::map<std::string, std::vector<Window>>;

inline WindowLabels parse_windows(const nlohmann::json& doc, const std::string& origin = "windows") {
  if (!doc.is_object()) throw load_error(origin + ": expected an object of series -> windows");
  WindowLabels labels;
  for (const auto& [key, list] : doc.items()) {
    if (!list.is_array()) throw load_error(origin + ": windows of " + key + " are not a list");
    auto& out = labels[key];
    for (const auto& pair : list) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
        throw load_error(origin + ": malformed window in " + key);
      const auto a = parse_timestamp(pair[0].get<std::string>());
      const auto b = parse_timestamp(pair[1].get<std::string>());
      if (!a || !b) throw load_error(origin + ": unparseable window timestamp in " + key);
      if (*a > *b) throw load_error(origin + ": window starts after it ends in " + key);
      out.push_back({*a, *b});
    }
  }
  return labels;
}

inline WindowLabels load_windows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw load_error("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw load_error(path.string() + ": " + e.what());
  }
  return parse_windows(doc, path.string());
}

// One series of a corpus with its detector panel.
struct CorpusSeries {
  std::string key;  // "<category>/<series>.csv"
  LabeledSeries series;
  ExpertPanel panel;
};

inline std::filesystem::path detector_results_path(const std::filesystem::path& root, const std::string& detector,
                                                   const std::string& key) {
  const std::filesystem::path rel(key);
  return root / "results" / detector / rel.parent_path() / (detector + "_" + rel.filename().string());
}

// Relative keys of every series under data/, sorted.
inline std::vector<std::string> list_corpus_series(const std::filesystem::path& root) {
  const auto data = root / "data";
  if (!std::filesystem::is_directory(data)) throw load_error(data.string() + ": not a directory");
  std::vector<std::string> keys;
  for (const auto& e : std::filesystem::recursive_directory_iterator(data))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      keys.push_back(std::filesystem::relative(e.path(), data).generic_string());
  std::sort(keys.begin(), keys.end());
  if (keys.empty()) throw load_error(data.string() + ": no series found");
  return keys;
}

inline CorpusSeries load_corpus_series(const std::filesystem::path& root, const std::string& key,
                                       const std::vector<std::string>& detectors, const WindowLabels& labels,
                                       FillPolicy fill = FillPolicy::strict) {
  auto s = load_series(root / "data" / key);
  CorpusSeries out;
  out.key = key;
  out.series.name = key;
  out.series.timestamps = std::move(s.timestamps);
  out.series.values = std::move(s.values);
  const auto it = labels.find(key);
  out.series.outcomes = windows_to_outcomes(it == labels.end() ? std::vector<Window>{} : it->second,
                                            out.series.timestamps);
  std::vector<std::filesystem::path> paths;
  for (const auto& d : detectors) paths.push_back(detector_results_path(root, d, key));
  out.panel = load_expert_scores(detectors, paths, out.series.timestamps, fill);
  return out;
}

} // namespace delayshare
