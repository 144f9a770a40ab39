#ifndef CLOCKCTBN_OPTIMIZE_HPP
#define CLOCKCTBN_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace clockctbn {

struct OptimizeOptions {
  double pg_tol = 1e-6;
  int max_iterations = 500;
  int memory = 8;
};

struct OptimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline double projected_gradient_norm(const std::vector<double>& x, const std::vector<double>& g,
                                      const std::vector<double>& lo, const std::vector<double>& hi) {
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double moved = std::clamp(x[i] - g[i], lo[i], hi[i]);
    norm = std::max(norm, std::abs(moved - x[i]));
  }
  return norm;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// Minimizes f over the box [lo, hi] with a projected limited-memory BFGS.
///
/// `fg(x, grad)` returns f(x) and writes its gradient. The search direction
/// is the two-loop L-BFGS direction restricted to the free variables; steps
/// are projected back onto the box and accepted by Armijo backtracking along
/// the projection arc. Stops when the projected gradient's infinity norm
/// drops below pg_tol, after max_iterations, or when no descent step exists.
template <class F>
OptimizeResult minimize_box(F&& fg, std::vector<double> x, const std::vector<double>& lo,
                            const std::vector<double>& hi, const OptimizeOptions& opt = {}) {
  const std::size_t dim = x.size();
  for (std::size_t i = 0; i < dim; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  std::vector<double> g(dim);
  double f = fg(x, g);
  OptimizeResult out;
  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::vector<double> d(dim);
  std::vector<double> x_new(dim);
  std::vector<double> g_new(dim);
  std::vector<double> alpha_hist;

  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it;
    if (!std::isfinite(f)) break;
    if (detail::projected_gradient_norm(x, g, lo, hi) < opt.pg_tol) {
      out.converged = true;
      break;
    }
    std::vector<bool> active(dim, false);
    for (std::size_t i = 0; i < dim; ++i)
      active[i] = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);

    // Two-loop recursion on the free subspace.
    std::vector<double> q = g;
    for (std::size_t i = 0; i < dim; ++i)
      if (active[i]) q[i] = 0.0;
    alpha_hist.assign(s_hist.size(), 0.0);
    for (std::size_t j = s_hist.size(); j-- > 0;) {
      const double rho = 1.0 / detail::dot(y_hist[j], s_hist[j]);
      alpha_hist[j] = rho * detail::dot(s_hist[j], q);
      for (std::size_t i = 0; i < dim; ++i) q[i] -= alpha_hist[j] * y_hist[j][i];
    }
    if (!s_hist.empty()) {
      const double gamma = detail::dot(s_hist.back(), y_hist.back()) / detail::dot(y_hist.back(), y_hist.back());
      for (auto& v : q) v *= gamma;
    }
    for (std::size_t j = 0; j < s_hist.size(); ++j) {
      const double rho = 1.0 / detail::dot(y_hist[j], s_hist[j]);
      const double beta = rho * detail::dot(y_hist[j], q);
      for (std::size_t i = 0; i < dim; ++i) q[i] += s_hist[j][i] * (alpha_hist[j] - beta);
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      d[i] = active[i] ? 0.0 : -q[i];
      slope += d[i] * g[i];
    }
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      for (std::size_t i = 0; i < dim; ++i) d[i] = active[i] ? 0.0 : -g[i];
    }
    double step = 1.0;
    if (s_hist.empty()) {
      double dmax = 0.0;
      for (double v : d) dmax = std::max(dmax, std::abs(v));
      if (dmax > 1.0) step = 1.0 / dmax;
    }

    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      double decrease = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        x_new[i] = std::clamp(x[i] + step * d[i], lo[i], hi[i]);
        decrease += g[i] * (x_new[i] - x[i]);
      }
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * decrease && decrease <= 0.0) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (s_hist.empty()) break;
      s_hist.clear();
      y_hist.clear();
      continue;
    }
    std::vector<double> s(dim);
    std::vector<double> y(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const bool moved = detail::dot(s, s) > 0.0;
    const double sy = detail::dot(s, y);
    if (sy > 1e-12 * std::sqrt(detail::dot(s, s) * detail::dot(y, y))) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    x = x_new;
    g = g_new;
    const double f_old = f;
    f = f_new;
    if (!moved || f_old - f <= 1e-15 * std::max(1.0, std::abs(f))) {
      // No measurable progress left in double precision.
      out.converged = detail::projected_gradient_norm(x, g, lo, hi) < opt.pg_tol;
      break;
    }
  }
  out.x = x;
  out.value = f;
  return out;
}

}  // namespace clockctbn

#endif  // CLOCKCTBN_OPTIMIZE_HPP
