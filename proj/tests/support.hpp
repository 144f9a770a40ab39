// Shared oracles and fixtures for the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "clockctbn/model.hpp"

namespace testing_support {

using namespace clockctbn;

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Pearson chi-square goodness-of-fit p-value.
inline double chi_square_pvalue(const std::vector<double>& observed, const std::vector<double>& probs) {
  double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    const double e = total * probs[i];
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  if (cells < 2) return 1.0;
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

inline std::vector<double> midranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

struct Spearman {
  double rho = 0.0;
  /// One-sided p-value for rho > 0 (t approximation).
  double p_greater = 1.0;
};

inline Spearman spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  Spearman out;
  if (sxx == 0.0 || syy == 0.0) return out;
  out.rho = sxy / std::sqrt(sxx * syy);
  if (n < 3) return out;
  if (out.rho >= 1.0) {
    out.p_greater = 0.0;
    return out;
  }
  const double t = out.rho * std::sqrt((n - 2.0) / (1.0 - out.rho * out.rho));
  boost::math::students_t dist(n - 2.0);
  out.p_greater = boost::math::cdf(boost::math::complement(dist, t));
  return out;
}

/// Runs a shell command; returns the exit status and captured stdout.
struct CommandResult {
  int status = -1;
  std::string out;
};

inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("clockctbn_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Model with the same survival law for every key of every node and uniform
/// transitions.
inline NetworkModel uniform_model(const Graph& g, const std::vector<std::size_t>& cards, const SurvivalParams& p) {
  std::map<ParamKey, SurvivalParams> phi;
  std::map<ParamKey, std::vector<double>> theta;
  for (NodeId n = 0; n < g.num_nodes(); ++n) {
    const std::size_t n_u = num_parent_states(g.parents(n), cards);
    for (std::size_t u = 0; u < n_u; ++u)
      for (std::size_t x = 0; x < cards[n]; ++x) {
        const ParamKey key{n, static_cast<LocalState>(x), u};
        phi.emplace(key, p);
        std::vector<double> row(cards[n], 1.0 / static_cast<double>(cards[n] - 1));
        row[x] = 0.0;
        theta.emplace(key, row);
      }
  }
  return NetworkModel(g, cards, p.family(), phi, theta);
}

/// Model built from an explicit per-key parameter function.
inline NetworkModel model_from(const Graph& g, const std::vector<std::size_t>& cards, Family family,
                               const std::function<SurvivalParams(const ParamKey&)>& phi_of) {
  std::map<ParamKey, SurvivalParams> phi;
  std::map<ParamKey, std::vector<double>> theta;
  for (NodeId n = 0; n < g.num_nodes(); ++n) {
    const std::size_t n_u = num_parent_states(g.parents(n), cards);
    for (std::size_t u = 0; u < n_u; ++u)
      for (std::size_t x = 0; x < cards[n]; ++x) {
        const ParamKey key{n, static_cast<LocalState>(x), u};
        phi.emplace(key, phi_of(key));
        std::vector<double> row(cards[n], 1.0 / static_cast<double>(cards[n] - 1));
        row[x] = 0.0;
        theta.emplace(key, row);
      }
  }
  return NetworkModel(g, cards, family, phi, theta);
}

}  // namespace testing_support
