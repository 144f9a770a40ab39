#ifndef CLOCKCTBN_GNW_HPP
#define CLOCKCTBN_GNW_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "clockctbn/errors.hpp"
#include "clockctbn/model.hpp"

namespace clockctbn::gnw {

/// Sampled expression levels of one experiment.
struct TimeSeries {
  std::vector<std::string> names;
  std::vector<double> times;
  /// values[i][n]: level of gene n at times[i].
  std::vector<std::vector<double>> values;
};

/// Offset between serialized simultaneous crossings.
inline constexpr double simultaneity_epsilon = 1e-9;

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Reads a tab-separated file: a header row (time column, then gene names)
/// followed by numeric rows. Blank lines separate experiments; a block may
/// repeat the header.
inline std::vector<TimeSeries> load_timeseries(std::istream& in, const std::string& source = "<input>") {
  std::vector<TimeSeries> out;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  bool block_open = false;
  auto fail = [&](const std::string& what) {
    throw ParseError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) {
      block_open = false;
      continue;
    }
    const auto fields = detail::split_tabs(line);
    double first = 0.0;
    if (!detail::parse_number(fields[0], first)) {
      std::vector<std::string> names;
      for (std::size_t i = 1; i < fields.size(); ++i) names.emplace_back(detail::trim(fields[i]));
      if (names.empty()) fail("header has no gene columns");
      if (!header.empty() && names != header) fail("header differs from the first header");
      header = std::move(names);
      continue;
    }
    if (header.empty()) fail("data row before the header");
    if (fields.size() != header.size() + 1)
      fail("expected " + std::to_string(header.size() + 1) + " fields, found " + std::to_string(fields.size()));
    if (!block_open) {
      out.push_back({header, {}, {}});
      block_open = true;
    }
    TimeSeries& ts = out.back();
    if (!ts.times.empty() && !(first > ts.times.back())) fail("time does not increase");
    std::vector<double> row(header.size());
    for (std::size_t i = 0; i < header.size(); ++i)
      if (!detail::parse_number(fields[i + 1], row[i])) fail("malformed number in column " + std::to_string(i + 2));
    ts.times.push_back(first);
    ts.values.push_back(std::move(row));
  }
  return out;
}

inline std::vector<TimeSeries> load_timeseries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return load_timeseries(in, path);
}

/// Binary trajectory from a sampled series: level 1 iff value >= threshold,
/// held until the next sample. Times are shifted so the first sample is t = 0.
/// Several genes switching at one sample time become separate events spaced
/// by simultaneity_epsilon in ascending gene order. Observation ends at the
/// last sample, or just after the last event if that is later.
inline Trajectory discretize(const TimeSeries& ts, double threshold = 0.5) {
  if (ts.times.size() < 2) throw InvalidTrajectory("time series needs at least two samples");
  const std::size_t n_genes = ts.names.size();
  const double t0 = ts.times.front();
  std::vector<LocalState> level(n_genes);
  for (std::size_t n = 0; n < n_genes; ++n) level[n] = ts.values[0][n] >= threshold ? 1 : 0;
  Trajectory traj;
  traj.initial = ClockedState::at_rest(level);
  for (std::size_t i = 1; i < ts.times.size(); ++i) {
    const double t = ts.times[i] - t0;
    std::size_t j = 0;
    for (std::size_t n = 0; n < n_genes; ++n) {
      const LocalState now = ts.values[i][n] >= threshold ? 1 : 0;
      if (now == level[n]) continue;
      traj.events.push_back({t + static_cast<double>(j) * simultaneity_epsilon, n, now});
      level[n] = now;
      ++j;
    }
  }
  traj.end_time = ts.times.back() - t0;
  if (!traj.events.empty() && traj.events.back().time >= traj.end_time)
    traj.end_time = traj.events.back().time + simultaneity_epsilon;
  return traj;
}

inline std::vector<Trajectory> filter_min_transitions(std::vector<Trajectory> trajs, std::size_t min_events = 8) {
  std::vector<Trajectory> out;
  for (auto& t : trajs)
    if (t.events.size() >= min_events) out.push_back(std::move(t));
  return out;
}

}  // namespace clockctbn::gnw

#endif  // CLOCKCTBN_GNW_HPP
