#ifndef CLOCKCTBN_INFER_PARAMS_HPP
#define CLOCKCTBN_INFER_PARAMS_HPP

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "clockctbn/errors.hpp"
#include "clockctbn/likelihood.hpp"
#include "clockctbn/model.hpp"
#include "clockctbn/optimize.hpp"
#include "clockctbn/special_functions.hpp"

namespace clockctbn {

// ---------------------------------------------------------------------------
// Priors and posteriors
// ---------------------------------------------------------------------------

/// Independent uniform priors on each survival parameter.
struct BoxPrior {
  std::vector<double> lower;
  std::vector<double> upper;

  BoxPrior() = default;
  BoxPrior(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) throw ModelError("box prior bounds differ in length");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] > 0.0) || !(upper[i] > lower[i]))
        throw ModelError("box prior needs 0 < lower < upper in every dimension");
  }

  /// [lo, hi] in every dimension of the family.
  static BoxPrior uniform(Family family, double lo = 0.1, double hi = 100.0) {
    return {std::vector<double>(family_arity(family), lo), std::vector<double>(family_arity(family), hi)};
  }

  std::size_t size() const { return lower.size(); }

  bool contains(std::span<const double> p) const {
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(p[i] >= lower[i] && p[i] <= upper[i])) return false;
    return true;
  }

  /// Log density: the normalizing constant inside, -inf outside.
  double log_density(std::span<const double> p) const {
    if (!contains(p)) return special::neg_inf;
    double v = 0.0;
    for (std::size_t i = 0; i < lower.size(); ++i) v -= std::log(upper[i] - lower[i]);
    return v;
  }
};

/// Dirichlet concentrations over next states, per key. The entry at the key's
/// own state is unused and kept at zero.
struct DirichletPosterior {
  std::map<ParamKey, std::vector<double>> concentration;

  static DirichletPosterior symmetric(const Graph& graph, std::span<const std::size_t> cardinalities,
                                      double conc = 1.0) {
    DirichletPosterior out;
    for (NodeId n = 0; n < graph.num_nodes(); ++n) {
      const std::size_t n_u = num_parent_states(graph.parents(n), cardinalities);
      for (std::size_t u = 0; u < n_u; ++u)
        for (std::size_t x = 0; x < cardinalities[n]; ++x) {
          std::vector<double> c(cardinalities[n], conc);
          c[x] = 0.0;
          out.concentration[{n, static_cast<LocalState>(x), u}] = std::move(c);
        }
    }
    return out;
  }

  /// Posterior mean transition probabilities per key.
  std::map<ParamKey, std::vector<double>> mean() const {
    std::map<ParamKey, std::vector<double>> out;
    for (const auto& [key, c] : concentration) {
      double total = 0.0;
      for (double v : c) total += v;
      std::vector<double> row(c.size(), 0.0);
      for (std::size_t i = 0; i < c.size(); ++i) row[i] = c[i] / total;
      out[key] = std::move(row);
    }
    return out;
  }
};

inline DirichletPosterior theta_posterior_update(DirichletPosterior prior, const SuffStats& stats) {
  for (const auto& [key, st] : stats) {
    auto it = prior.concentration.find(key);
    if (it == prior.concentration.end()) throw ModelError("no Dirichlet prior for key " + key.str());
    for (std::size_t x = 0; x < st.target_counts.size(); ++x)
      it->second.at(x) += static_cast<double>(st.target_counts[x]);
  }
  return prior;
}

/// Inverse-Gamma distribution over a Rayleigh key's sigma^2.
struct InvGammaPosterior {
  double shape = 1.0;
  double scale = 1.0;

  double log_pdf(double v) const {
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(v) - scale / v;
  }
  double mode() const { return scale / (shape + 1.0); }
};

inline InvGammaPosterior rayleigh_conjugate_update(InvGammaPosterior prior, const KeyStats& stats) {
  const KeyLikelihood lik(stats, Family::rayleigh);
  prior.shape += lik.num_full();
  prior.scale += lik.exposure();
  return prior;
}

// ---------------------------------------------------------------------------
// Survival-parameter posterior
// ---------------------------------------------------------------------------

inline double phi_log_posterior(const KeyLikelihood& lik, std::span<const double> p, const BoxPrior& prior) {
  const double lp = prior.log_density(p);
  if (lp == special::neg_inf) return lp;
  return lik.value(p) + lp;
}

inline double phi_log_posterior(const KeyStats& stats, const SurvivalParams& p, const BoxPrior& prior) {
  const auto v = p.values();
  return phi_log_posterior(KeyLikelihood(stats, p.family()), v, prior);
}

/// Gradient in the natural parameters; the box prior is flat inside.
inline double phi_log_posterior_gradient(const KeyLikelihood& lik, std::span<const double> p,
                                         const BoxPrior& prior, std::span<double> grad) {
  const double lp = prior.log_density(p);
  const double v = lik.value_and_gradient(p, grad);
  return v + lp;
}

namespace detail {

// Deterministic interior starting points: geometric fractions of each log-range.
inline std::vector<std::vector<double>> restart_points(const BoxPrior& prior) {
  const std::size_t dim = prior.size();
  auto at = [&](std::size_t i, double frac) {
    return std::exp(std::log(prior.lower[i]) + frac * (std::log(prior.upper[i]) - std::log(prior.lower[i])));
  };
  std::vector<std::vector<double>> out;
  if (dim == 1) {
    for (double f : {0.125, 0.375, 0.625, 0.875}) out.push_back({at(0, f)});
  } else {
    for (double f0 : {0.25, 0.75})
      for (double f1 : {0.25, 0.75}) out.push_back({at(0, f0), at(1, f1)});
  }
  return out;
}

}  // namespace detail

struct MapOptions {
  OptimizeOptions optimizer;
  /// Also run the deterministic restarts (the initial point always runs first).
  bool restarts = true;
};

/// Maximum a posteriori survival parameters of one key under a box prior.
///
/// Optimizes in log-parameter coordinates. Runs from `init` and from four
/// deterministic interior points; the best value wins, ties keep the earlier.
inline SurvivalParams map_estimate(const KeyStats& stats, Family family, const BoxPrior& prior,
                                   std::optional<SurvivalParams> init = std::nullopt,
                                   const MapOptions& opt = {}) {
  if (stats.full.empty() && stats.censored.empty())
    throw InsufficientData("no full or censored samples for this key");
  if (prior.size() != family_arity(family)) throw ModelError("prior dimension does not match the family");
  const KeyLikelihood lik(stats, family);
  const std::size_t dim = prior.size();
  std::vector<double> lo(dim);
  std::vector<double> hi(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    lo[i] = std::log(prior.lower[i]);
    hi[i] = std::log(prior.upper[i]);
  }
  std::vector<double> p(dim);
  std::vector<double> g(dim);
  auto objective = [&](const std::vector<double>& z, std::vector<double>& grad) {
    for (std::size_t i = 0; i < dim; ++i) p[i] = std::exp(z[i]);
    const double v = lik.value_and_gradient(p, g);
    for (std::size_t i = 0; i < dim; ++i) grad[i] = -g[i] * p[i];
    return -v;
  };

  std::vector<std::vector<double>> starts;
  if (init) {
    if (init->family() != family) throw ModelError("initial parameters have the wrong family");
    starts.push_back(init->values());
  } else {
    std::vector<double> mid(dim);
    for (std::size_t i = 0; i < dim; ++i) mid[i] = std::sqrt(prior.lower[i] * prior.upper[i]);
    starts.push_back(mid);
  }
  if (opt.restarts)
    for (auto& s : detail::restart_points(prior)) starts.push_back(std::move(s));

  std::vector<double> best_z;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    std::vector<double> z(dim);
    for (std::size_t i = 0; i < dim; ++i) z[i] = std::log(std::clamp(s[i], prior.lower[i], prior.upper[i]));
    const OptimizeResult r = minimize_box(objective, z, lo, hi, opt.optimizer);
    if (r.value < best) {
      best = r.value;
      best_z = r.x;
    }
  }
  if (best_z.empty()) throw InsufficientData("likelihood is not finite anywhere in the prior box");
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = std::clamp(std::exp(best_z[i]), prior.lower[i], prior.upper[i]);
  return SurvivalParams(family, out);
}

/// Posterior weights on an explicit parameter lattice, normalized by
/// log-sum-exp.
inline std::vector<double> grid_posterior(const KeyStats& stats, Family family,
                                          const std::vector<std::vector<double>>& grid, const BoxPrior& prior) {
  if (grid.empty()) throw ModelError("empty parameter grid");
  const KeyLikelihood lik(stats, family);
  std::vector<double> logw(grid.size());
  double norm = special::neg_inf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].size() != family_arity(family)) throw ModelError("grid point has the wrong dimension");
    logw[i] = phi_log_posterior(lik, grid[i], prior);
    norm = special::log_add_exp(norm, logw[i]);
  }
  if (norm == special::neg_inf) throw ModelError("posterior is zero on every grid point");
  for (auto& w : logw) w = std::exp(w - norm);
  return logw;
}

// ---------------------------------------------------------------------------
// Whole-model fit
// ---------------------------------------------------------------------------

struct KeyEstimate {
  std::optional<SurvivalParams> phi;
  std::vector<double> theta;
  std::size_t num_full = 0;
  std::size_t num_censored = 0;
  std::size_t num_truncated = 0;
};

struct ParamFit {
  std::map<ParamKey, KeyEstimate> keys;
  /// Keys skipped for lack of data.
  std::vector<ParamKey> skipped;
};

/// MAP survival parameters and posterior-mean transition probabilities for
/// every key of the given structure.
inline ParamFit fit_params(const std::vector<Trajectory>& trajs, const Graph& graph,
                           std::span<const std::size_t> cardinalities, Family family, const BoxPrior& prior,
                           double dirichlet_conc = 1.0) {
  SuffStats pooled;
  for (const auto& t : trajs) merge_stats(pooled, sufficient_stats(t, graph, cardinalities));
  const DirichletPosterior post =
      theta_posterior_update(DirichletPosterior::symmetric(graph, cardinalities, dirichlet_conc), pooled);
  const auto theta_mean = post.mean();
  ParamFit fit;
  for (const auto& [key, row] : theta_mean) {
    KeyEstimate est;
    est.theta = row;
    auto it = pooled.find(key);
    if (it != pooled.end()) {
      est.num_full = it->second.full.size();
      est.num_censored = it->second.censored.size();
      est.num_truncated = it->second.truncated.size();
      try {
        est.phi = map_estimate(it->second, family, prior);
      } catch (const InsufficientData&) {
        fit.skipped.push_back(key);
      }
    } else {
      fit.skipped.push_back(key);
    }
    fit.keys.emplace(key, std::move(est));
  }
  return fit;
}

}  // namespace clockctbn

#endif  // CLOCKCTBN_INFER_PARAMS_HPP
