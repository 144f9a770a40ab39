#ifndef CLOCKCTBN_SURVIVAL_HPP
#define CLOCKCTBN_SURVIVAL_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>

#include "clockctbn/model.hpp"
#include "clockctbn/special_functions.hpp"

namespace clockctbn {

// Survival-time primitives for the four supported families. Everything is
// evaluated in the log domain; Gamma goes through the log incomplete gamma.

inline double log_survival(const SurvivalParams& p, double s) {
  if (!(s >= 0.0)) throw std::domain_error("log_survival: negative survival time");
  switch (p.family()) {
    case Family::exponential: return -p[0] * s;
    case Family::weibull: return -p[1] * std::pow(s, p[0]);
    case Family::rayleigh: return -(s * s) / (2.0 * p[0]);
    case Family::gamma:
      if (p[0] == 1.0) return -p[1] * s;
      return special::log_gamma_q(p[0], p[1] * s);
  }
  return 0.0;
}

inline double log_hazard(const SurvivalParams& p, double s) {
  if (!(s >= 0.0)) throw std::domain_error("hazard: negative survival time");
  switch (p.family()) {
    case Family::exponential: return std::log(p[0]);
    case Family::weibull: {
      const double k = p[0];
      if (s == 0.0 && k < 1.0) throw std::domain_error("hazard: Weibull hazard is singular at s = 0 for k < 1");
      if (s == 0.0 && k > 1.0) return special::neg_inf;
      if (s == 0.0) return std::log(p[1]);
      return std::log(p[1]) + std::log(k) + (k - 1.0) * std::log(s);
    }
    case Family::rayleigh:
      if (s == 0.0) return special::neg_inf;
      return std::log(s) - std::log(p[0]);
    case Family::gamma: {
      const double a = p[0];
      const double b = p[1];
      if (a == 1.0) return std::log(b);
      if (s == 0.0) {
        if (a < 1.0) throw std::domain_error("hazard: Gamma hazard is singular at s = 0 for shape < 1");
        return special::neg_inf;
      }
      const double log_pdf = a * std::log(b) + (a - 1.0) * std::log(s) - b * s - std::lgamma(a);
      return log_pdf - special::log_gamma_q(a, b * s);
    }
  }
  return 0.0;
}

/// Exit rate lambda(s) = -d/ds log Lambda(s).
inline double hazard(const SurvivalParams& p, double s) {
  switch (p.family()) {
    case Family::exponential: return p[0];
    case Family::weibull:
      if (s == 0.0 && p[0] < 1.0) throw std::domain_error("hazard: Weibull hazard is singular at s = 0 for k < 1");
      if (!(s >= 0.0)) throw std::domain_error("hazard: negative survival time");
      return p[1] * p[0] * std::pow(s, p[0] - 1.0);
    case Family::rayleigh:
      if (!(s >= 0.0)) throw std::domain_error("hazard: negative survival time");
      return s / p[0];
    case Family::gamma:
      if (p[0] == 1.0) {
        if (!(s >= 0.0)) throw std::domain_error("hazard: negative survival time");
        return p[1];
      }
      return std::exp(log_hazard(p, s));
  }
  return 0.0;
}

inline double log_density(const SurvivalParams& p, double s) {
  if (!(s > 0.0)) throw std::domain_error("log_density: survival time must be positive");
  switch (p.family()) {
    case Family::exponential: return std::log(p[0]) - p[0] * s;
    case Family::weibull: {
      const double k = p[0];
      const double b = p[1];
      return std::log(b) + std::log(k) + (k - 1.0) * std::log(s) - b * std::pow(s, k);
    }
    case Family::rayleigh: return std::log(s) - std::log(p[0]) - (s * s) / (2.0 * p[0]);
    case Family::gamma: {
      const double a = p[0];
      const double b = p[1];
      if (a == 1.0) return std::log(b) - b * s;
      return a * std::log(b) + (a - 1.0) * std::log(s) - b * s - std::lgamma(a);
    }
  }
  return 0.0;
}

namespace detail {

// Residual s with log Lambda(tau + s) = log Lambda(tau) + log u, found by
// bisection on the (nonincreasing) log survival function.
inline double invert_truncated_by_bisection(const SurvivalParams& p, double tau, double log_u) {
  const double target = log_survival(p, tau) + log_u;
  double lo = 0.0;
  double hi = 1.0;
  if (p.family() == Family::gamma) hi = std::max(1.0, p[0]) / p[1];
  while (log_survival(p, tau + hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw std::domain_error("sample_truncated: failed to bracket the residual");
  }
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (log_survival(p, tau + mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline constexpr int gamma_rejection_cap = 10000;

}  // namespace detail

/// Residual survival time beyond an elapsed clock `tau`, by inverse transform
/// of an explicit uniform `u`: P(residual > s) = Lambda(tau + s) / Lambda(tau).
inline double sample_truncated(const SurvivalParams& p, double tau, double u) {
  if (!(tau >= 0.0)) throw std::domain_error("sample_truncated: negative truncation");
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("sample_truncated: uniform must lie in (0, 1)");
  const double log_u = std::log(u);
  double s = 0.0;
  switch (p.family()) {
    case Family::exponential: s = -log_u / p[0]; break;
    case Family::weibull: {
      const double k = p[0];
      s = std::pow(std::pow(tau, k) - log_u / p[1], 1.0 / k) - tau;
      break;
    }
    case Family::rayleigh: s = std::sqrt(tau * tau - 2.0 * p[0] * log_u) - tau; break;
    case Family::gamma: s = detail::invert_truncated_by_bisection(p, tau, log_u); break;
  }
  return s > 0.0 ? s : std::numeric_limits<double>::denorm_min();
}

/// Random source exposing an untruncated Gamma draw; Gamma residuals then use
/// rejection sampling instead of numerical inversion.
template <class G>
concept GammaSource = requires(G& g) {
  { g.gamma(1.0, 1.0) } -> std::convertible_to<double>;
};

/// Residual survival time drawn from a uniform source. Exponential, Weibull
/// and Rayleigh consume exactly one uniform. Gamma draws untruncated variates
/// until one exceeds `tau` (at most 10^4 attempts), then falls back to
/// inversion with one fresh uniform.
template <class G>
  requires requires(G& g) { { g.uniform() } -> std::convertible_to<double>; }
double sample_truncated(const SurvivalParams& p, double tau, G& gen) {
  if (p.family() == Family::gamma) {
    if constexpr (GammaSource<G>) {
      for (int attempt = 0; attempt < detail::gamma_rejection_cap; ++attempt) {
        const double draw = gen.gamma(p[0], p[1]);
        if (draw > tau) return draw - tau;
      }
    }
  }
  return sample_truncated(p, tau, static_cast<double>(gen.uniform()));
}

}  // namespace clockctbn

#endif  // CLOCKCTBN_SURVIVAL_HPP
