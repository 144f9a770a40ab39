#ifndef CLOCKCTBN_QUADRATURE_HPP
#define CLOCKCTBN_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "clockctbn/errors.hpp"
#include "clockctbn/special_functions.hpp"

namespace clockctbn {

struct RombergOptions {
  double rel_tol = 1e-6;
  int max_levels = 12;
  int min_levels = 4;
  /// Points of the probe grid used to locate the integrand's peak.
  int probe_points = 33;
  /// Integrand values more than this many log units below the peak are
  /// treated as zero when trimming the integration range.
  double tail_cutoff = 50.0;
};

struct RombergResult {
  double value = 0.0;
  int levels = 0;
  bool converged = false;
};

/// Romberg integration of f over [a, b]. Refines until successive diagonal
/// estimates agree to rel_tol (after min_levels) or max_levels is reached.
template <class F>
RombergResult romberg(F&& f, double a, double b, const RombergOptions& opt = {}) {
  RombergResult out;
  if (b == a) {
    out.converged = true;
    return out;
  }
  std::vector<double> prev(1);
  std::vector<double> cur;
  double h = b - a;
  prev[0] = 0.5 * h * (f(a) + f(b));
  std::uint64_t n_new = 1;
  for (int level = 1; level <= opt.max_levels; ++level) {
    h *= 0.5;
    double sum = 0.0;
    for (std::uint64_t i = 0; i < n_new; ++i) sum += f(a + static_cast<double>(2 * i + 1) * h);
    n_new *= 2;
    cur.assign(static_cast<std::size_t>(level) + 1, 0.0);
    cur[0] = 0.5 * prev[0] + h * sum;
    double factor = 1.0;
    for (int j = 1; j <= level; ++j) {
      factor *= 4.0;
      cur[j] = cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (factor - 1.0);
    }
    out.value = cur[level];
    out.levels = level;
    const double diff = std::abs(cur[level] - prev[level - 1]);
    if (level >= opt.min_levels && diff <= opt.rel_tol * std::abs(cur[level])) {
      out.converged = true;
      return out;
    }
    if (level >= opt.min_levels && cur[level] == 0.0 && prev[level - 1] == 0.0) {
      out.converged = true;
      return out;
    }
    prev.swap(cur);
  }
  return out;
}

struct LogIntegral {
  double log_value = special::neg_inf;
  /// Peak location and value used as the scaling constant.
  double mode = 0.0;
  double log_peak = special::neg_inf;
};

/// log of the integral of exp(log_f) over [a, b].
///
/// The peak is located on a probe grid and refined with Brent's method; the
/// integrand is divided by its peak value, the range is trimmed to where it
/// exceeds exp(-tail_cutoff) and each side of the peak is integrated by
/// Romberg separately. Assumes a single dominant mode.
template <class F>
LogIntegral log_integrate(F&& log_f, double a, double b, const RombergOptions& opt = {}) {
  LogIntegral out;
  if (!(b > a)) throw IntegrationError("log_integrate: empty interval");
  const int n_probe = std::max(3, opt.probe_points);
  std::vector<double> xs(n_probe);
  std::vector<double> ys(n_probe);
  int best = 0;
  for (int i = 0; i < n_probe; ++i) {
    xs[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n_probe - 1);
    ys[i] = log_f(xs[i]);
    if (ys[i] > ys[best]) best = i;
  }
  if (ys[best] == special::neg_inf) return out;
  const double lo_b = xs[std::max(0, best - 1)];
  const double hi_b = xs[std::min(n_probe - 1, best + 1)];
  auto neg = [&](double x) {
    const double v = log_f(x);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
  };
  const auto refined = boost::math::tools::brent_find_minima(neg, lo_b, hi_b, 52);
  double mode = xs[best];
  double peak = ys[best];
  if (-refined.second > peak) {
    mode = refined.first;
    peak = -refined.second;
  }
  out.mode = mode;
  out.log_peak = peak;

  auto scaled = [&](double x) {
    const double v = log_f(x);
    return v == special::neg_inf ? 0.0 : std::exp(v - peak);
  };
  // Walk outward from the peak until the integrand is negligible, then
  // bisect for the cutoff crossing so steep tails keep a resolvable width.
  const double step0 = 1e-3 * (b - a);
  const double cutoff = peak - opt.tail_cutoff;
  auto trim = [&](double dir) {
    const double edge = dir > 0 ? b : a;
    double inside = mode;
    double d = step0;
    double outside = edge;
    while (true) {
      const double x = mode + dir * d;
      if (dir > 0 ? x >= b : x <= a) {
        if (log_f(edge) >= cutoff) return edge;
        break;
      }
      if (log_f(x) < cutoff) {
        outside = x;
        break;
      }
      inside = x;
      d *= 2.0;
    }
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      if (log_f(mid) < cutoff)
        outside = mid;
      else
        inside = mid;
    }
    return outside;
  };
  const double lo = trim(-1.0);
  const double hi = trim(1.0);
  // A side narrower than this is a cliff at the box edge; there the integrand
  // is integrated as the exponential decay through its two end values.
  const double resolvable = 1e-8 * (b - a);
  auto side = [&](double from, double to) {
    const double width = std::abs(to - from);
    if (width == 0.0) return 0.0;
    if (width < resolvable) {
      const double drop = peak - log_f(to);
      if (!(drop > 1e-6)) return width;
      return width * -std::expm1(-drop) / drop;
    }
    const RombergResult r = romberg(scaled, std::min(from, to), std::max(from, to), opt);
    if (!r.converged)
      throw IntegrationError("Romberg integration did not converge within " + std::to_string(opt.max_levels) +
                             " levels");
    return r.value;
  };
  const double total = side(mode, lo) + side(mode, hi);
  out.log_value = total > 0.0 ? peak + std::log(total) : special::neg_inf;
  return out;
}

}  // namespace clockctbn

#endif  // CLOCKCTBN_QUADRATURE_HPP
