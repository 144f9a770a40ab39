#ifndef CLOCKCTBN_SPECIAL_FUNCTIONS_HPP
#define CLOCKCTBN_SPECIAL_FUNCTIONS_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace clockctbn::special {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

/// log(exp(a) - exp(b)) for a >= b.
inline double log_sub_exp(double a, double b) {
  if (b == neg_inf) return a;
  if (b >= a) return neg_inf;
  return a + std::log1p(-std::exp(b - a));
}

namespace detail {

// Series for the lower regularized incomplete gamma, valid for x < a + 1.
inline double log_gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return std::log(sum) - x + a * std::log(x) - std::lgamma(a);
}

// Lentz continued fraction for the upper regularized incomplete gamma, x >= a + 1.
inline double log_gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::log(h) - x + a * std::log(x) - std::lgamma(a);
}

}  // namespace detail

/// log P(a, x) and log Q(a, x), the regularized lower and upper incomplete
/// gamma functions, both evaluated in the log domain so that tail values far
/// below the double range stay finite.
inline std::pair<double, double> log_gamma_pq(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("incomplete gamma requires a > 0");
  if (!(x >= 0.0)) throw std::domain_error("incomplete gamma requires x >= 0");
  if (x == 0.0) return {neg_inf, 0.0};
  if (std::isinf(x)) return {0.0, neg_inf};
  if (x < a + 1.0) {
    const double lp = detail::log_gamma_p_series(a, x);
    return {lp, std::log1p(-std::exp(lp))};
  }
  const double lq = detail::log_gamma_q_fraction(a, x);
  return {std::log1p(-std::exp(lq)), lq};
}

inline double log_gamma_q(double a, double x) { return log_gamma_pq(a, x).second; }
inline double log_gamma_p(double a, double x) { return log_gamma_pq(a, x).first; }

/// log(P(a, x_hi) - P(a, x_lo)) for 0 <= x_lo <= x_hi: the log mass a
/// unit-rate Gamma(a) places on [x_lo, x_hi].
inline double log_gamma_interval(double a, double x_lo, double x_hi) {
  if (x_hi <= x_lo) return neg_inf;
  const auto [lp_lo, lq_lo] = log_gamma_pq(a, x_lo);
  const auto [lp_hi, lq_hi] = log_gamma_pq(a, x_hi);
  // Subtract in whichever tail keeps the larger operand away from 1.
  if (lp_hi < std::log(0.5)) return log_sub_exp(lp_hi, lp_lo);
  if (lq_lo < std::log(0.5)) return log_sub_exp(lq_lo, lq_hi);
  // Interval straddles the bulk: 1 - P(lo) - Q(hi).
  return std::log1p(-(std::exp(lp_lo) + std::exp(lq_hi)));
}

/// d/dx log Q(a, x).
inline double d_log_gamma_q_dx(double a, double x) {
  if (x == 0.0) return a < 1.0 ? neg_inf : (a == 1.0 ? -1.0 : 0.0);
  const double lq = log_gamma_q(a, x);
  return -std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a) - lq);
}

/// d/da log Q(a, x) by central differences with step 1e-6 * max(1, a).
inline double d_log_gamma_q_da(double a, double x) {
  const double h = 1e-6 * (a > 1.0 ? a : 1.0);
  const double lo = a - h > 0.0 ? a - h : a / 2.0;
  return (log_gamma_q(a + h, x) - log_gamma_q(lo, x)) / (a + h - lo);
}

}  // namespace clockctbn::special

#endif  // CLOCKCTBN_SPECIAL_FUNCTIONS_HPP
