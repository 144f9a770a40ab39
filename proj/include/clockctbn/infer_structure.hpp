#ifndef CLOCKCTBN_INFER_STRUCTURE_HPP
#define CLOCKCTBN_INFER_STRUCTURE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clockctbn/errors.hpp"
#include "clockctbn/infer_params.hpp"
#include "clockctbn/likelihood.hpp"
#include "clockctbn/model.hpp"
#include "clockctbn/quadrature.hpp"
#include "clockctbn/special_functions.hpp"

namespace clockctbn {

// ---------------------------------------------------------------------------
// Candidate parent sets
// ---------------------------------------------------------------------------

/// Every subset of the other nodes with at most max_indegree members, ordered
/// by size and then lexicographically.
inline std::vector<std::vector<NodeId>> enumerate_parent_sets(std::size_t num_nodes, NodeId n,
                                                             std::size_t max_indegree) {
  if (n >= num_nodes) throw ModelError("node index out of range");
  std::vector<NodeId> others;
  for (NodeId m = 0; m < num_nodes; ++m)
    if (m != n) others.push_back(m);
  const std::size_t cap = std::min(max_indegree, others.size());
  std::vector<std::vector<NodeId>> out;
  for (std::size_t size = 0; size <= cap; ++size) {
    std::vector<bool> pick(others.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(size), true);
    // prev_permutation over a leading-true mask walks subsets in lexicographic order.
    do {
      std::vector<NodeId> set;
      for (std::size_t i = 0; i < others.size(); ++i)
        if (pick[i]) set.push_back(others[i]);
      out.push_back(std::move(set));
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Marginal likelihoods per key
// ---------------------------------------------------------------------------

struct MarginalPriors {
  /// Uniform box over survival parameters (numerically integrated families).
  double box_lower = 0.1;
  double box_upper = 100.0;
  /// Gamma(a, b) prior on the exponential rate.
  double exp_rate_shape = 1.0;
  double exp_rate_rate = 1.0;
  /// Inverse-Gamma prior on the Rayleigh sigma^2.
  InvGammaPosterior rayleigh{1.0, 1.0};
  /// Symmetric Dirichlet concentration per target state.
  double dirichlet_conc = 1.0;
  RombergOptions romberg;
};

/// Dirichlet-categorical evidence of the transition counts of one key.
inline double theta_log_evidence(const KeyStats& stats, LocalState from, double conc) {
  double total_c = 0.0;
  double total_n = 0.0;
  double v = 0.0;
  for (std::size_t x = 0; x < stats.target_counts.size(); ++x) {
    if (static_cast<LocalState>(x) == from) continue;
    const double n = static_cast<double>(stats.target_counts[x]);
    total_c += conc;
    total_n += n;
    if (n > 0.0) v += std::lgamma(conc + n) - std::lgamma(conc);
  }
  if (total_n == 0.0) return 0.0;
  return v + std::lgamma(total_c) - std::lgamma(total_c + total_n);
}

/// Exponential rate with a conjugate Gamma(a, b) prior.
inline double exponential_log_marginal(const KeyStats& stats, double a, double b) {
  if (stats.empty()) return 0.0;
  const KeyLikelihood lik(stats, Family::exponential);
  const double n = lik.num_full();
  return a * std::log(b) - std::lgamma(a) + std::lgamma(a + n) - (a + n) * std::log(b + lik.exposure());
}

/// Rayleigh sigma^2 with a conjugate inverse-Gamma prior, in closed form.
inline double rayleigh_log_marginal(const KeyStats& stats, const InvGammaPosterior& prior) {
  if (stats.empty()) return 0.0;
  const KeyLikelihood lik(stats, Family::rayleigh);
  const double n = lik.num_full();
  const double a = prior.shape;
  const double b = prior.scale;
  return lik.sum_log_full() + a * std::log(b) - std::lgamma(a) + std::lgamma(a + n) -
         (a + n) * std::log(b + lik.exposure());
}

/// The same Rayleigh marginal by Romberg integration over log sigma^2.
inline double rayleigh_log_marginal_romberg(const KeyStats& stats, const InvGammaPosterior& prior,
                                            const RombergOptions& opt = {}, double log_lo = -30.0,
                                            double log_hi = 30.0) {
  if (stats.empty()) return 0.0;
  const KeyLikelihood lik(stats, Family::rayleigh);
  auto log_f = [&](double z) {
    const double v = std::exp(z);
    const std::array<double, 2> p{v, 0.0};
    return lik.value(p) + prior.log_pdf(v) + z;
  };
  return log_integrate(log_f, log_lo, log_hi, opt).log_value;
}

/// Marginal over a uniform box by (nested) Romberg integration on log axes.
/// Works for every family; used directly for Gamma and as the reference for
/// the Weibull shortcut below.
inline double box_log_marginal_romberg(const KeyStats& stats, Family family, double lo, double hi,
                                       const RombergOptions& opt = {}) {
  if (stats.empty()) return 0.0;
  const KeyLikelihood lik(stats, family);
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  const double log_width = std::log(hi - lo);
  if (family_arity(family) == 1) {
    auto log_f = [&](double z) {
      const std::array<double, 2> p{std::exp(z), 0.0};
      return lik.value(p) + z - log_width;
    };
    return log_integrate(log_f, log_lo, log_hi, opt).log_value;
  }
  auto outer = [&](double z0) {
    const double p0 = std::exp(z0);
    auto inner = [&](double z1) {
      const double p[2] = {p0, std::exp(z1)};
      return lik.value(p) + z1 - log_width;
    };
    return log_integrate(inner, log_lo, log_hi, opt).log_value + z0 - log_width;
  };
  return log_integrate(outer, log_lo, log_hi, opt).log_value;
}

/// Weibull marginal over the box prior: the rate integral is done in closed
/// form via the incomplete gamma function, the shape integral by Romberg.
inline double weibull_log_marginal(const KeyStats& stats, double lo, double hi, const RombergOptions& opt = {}) {
  if (stats.empty()) return 0.0;
  const KeyLikelihood lik(stats, Family::weibull);
  const double n = lik.num_full();
  const double log_width = std::log(hi - lo);
  auto log_f = [&](double z) {
    const double k = std::exp(z);
    const double log_a = lik.weibull_log_exposure(k).first;
    double inner = 0.0;
    if (log_a == special::neg_inf) {
      inner = special::log_sub_exp((n + 1.0) * std::log(hi), (n + 1.0) * std::log(lo)) - std::log(n + 1.0);
    } else {
      const double a = std::exp(log_a);
      inner = std::lgamma(n + 1.0) - (n + 1.0) * log_a + special::log_gamma_interval(n + 1.0, lo * a, hi * a);
    }
    double v = inner - log_width + (k - 1.0) * lik.sum_log_full() + z - log_width;
    if (n > 0.0) v += n * z;
    return v;
  };
  return log_integrate(log_f, std::log(lo), std::log(hi), opt).log_value;
}

/// log of the integral of p(T | X, phi) p(phi) for one key.
inline double phi_log_marginal(const KeyStats& stats, Family family, const MarginalPriors& priors) {
  switch (family) {
    case Family::exponential: return exponential_log_marginal(stats, priors.exp_rate_shape, priors.exp_rate_rate);
    case Family::rayleigh: return rayleigh_log_marginal(stats, priors.rayleigh);
    case Family::weibull: return weibull_log_marginal(stats, priors.box_lower, priors.box_upper, priors.romberg);
    case Family::gamma:
      return box_log_marginal_romberg(stats, Family::gamma, priors.box_lower, priors.box_upper, priors.romberg);
  }
  return 0.0;
}

/// Survival plus transition evidence of one key. Integration failures are
/// rethrown with the key attached.
inline double key_log_marginal(const ParamKey& key, const KeyStats& stats, Family family,
                               const MarginalPriors& priors) {
  try {
    return phi_log_marginal(stats, family, priors) + theta_log_evidence(stats, key.state, priors.dirichlet_conc);
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string(e.what()) + " (key " + key.str() + ")");
  }
}

/// log p(X, T | parents of n = parents), summed over the node's keys.
inline double local_log_marginal(const std::vector<Trajectory>& trajs, NodeId n, std::span<const NodeId> parents,
                                 std::span<const std::size_t> cardinalities, Family family,
                                 const MarginalPriors& priors = {}) {
  SuffStats pooled;
  for (const auto& t : trajs) {
    validate_trajectory(t, cardinalities);
    const auto windows = derive_windows(t);
    accumulate_node_stats(windows, n, parents, cardinalities, pooled);
  }
  double total = 0.0;
  for (const auto& [key, st] : pooled) total += key_log_marginal(key, st, family, priors);
  return total;
}

// ---------------------------------------------------------------------------
// Graph posterior
// ---------------------------------------------------------------------------

struct GraphPrior {
  enum class Kind { uniform, edge_penalty };
  Kind kind = Kind::uniform;
  double rho = 1.0;

  /// Unnormalized log prior of one parent set.
  double log_prior(std::size_t set_size) const {
    return kind == Kind::uniform ? 0.0 : -rho * static_cast<double>(set_size);
  }
};

struct NodePosterior {
  std::vector<std::vector<NodeId>> sets;
  std::vector<double> log_marginal;
  /// Normalized log posterior weights.
  std::vector<double> log_weight;
};

struct ParentSetPosterior {
  std::vector<NodePosterior> nodes;
};

inline void normalize_node(NodePosterior& node, const GraphPrior& prior) {
  node.log_weight.resize(node.sets.size());
  double norm = special::neg_inf;
  for (std::size_t i = 0; i < node.sets.size(); ++i) {
    node.log_weight[i] = node.log_marginal[i] + prior.log_prior(node.sets[i].size());
    norm = special::log_add_exp(norm, node.log_weight[i]);
  }
  for (auto& w : node.log_weight) w -= norm;
}

/// Edge (m, n) gets the posterior mass of n's parent sets that contain m.
inline std::vector<std::vector<double>> edge_marginals(const ParentSetPosterior& post) {
  const std::size_t n_nodes = post.nodes.size();
  std::vector<std::vector<double>> e(n_nodes, std::vector<double>(n_nodes, 0.0));
  for (NodeId n = 0; n < n_nodes; ++n) {
    const auto& node = post.nodes[n];
    for (std::size_t i = 0; i < node.sets.size(); ++i) {
      const double w = std::exp(node.log_weight[i]);
      for (NodeId m : node.sets[i]) e[m][n] += w;
    }
  }
  for (auto& row : e)
    for (auto& v : row) v = std::min(1.0, v);
  return e;
}

/// Per-node parent-set posterior, fed one trajectory at a time.
///
/// Pooled mode re-integrates every candidate from the prior over the
/// concatenated evidence seen so far. PerTrajectory mode instead adds each
/// trajectory's own marginal likelihood to the running log weights.
class StructureLearner {
public:
  enum class Mode { pooled, per_trajectory };

  StructureLearner(std::vector<std::size_t> cardinalities, Family family, std::size_t max_indegree,
                   MarginalPriors priors = {}, GraphPrior graph_prior = {}, Mode mode = Mode::pooled)
      : cards_(std::move(cardinalities)),
        family_(family),
        priors_(std::move(priors)),
        graph_prior_(graph_prior),
        mode_(mode) {
    const std::size_t n_nodes = cards_.size();
    if (n_nodes == 0) throw ModelError("structure learner needs at least one node");
    if (max_indegree >= n_nodes && n_nodes > 1) max_indegree = n_nodes - 1;
    nodes_.resize(n_nodes);
    for (NodeId n = 0; n < n_nodes; ++n) {
      auto& cand = nodes_[n];
      cand.sets = enumerate_parent_sets(n_nodes, n, max_indegree);
      cand.pooled.resize(cand.sets.size());
      cand.cache.resize(cand.sets.size());
      cand.accumulated.assign(cand.sets.size(), 0.0);
    }
  }

  std::size_t num_trajectories() const { return count_; }

  void add(const Trajectory& traj) {
    validate_trajectory(traj, cards_);
    const auto windows = derive_windows(traj);
    for (NodeId n = 0; n < nodes_.size(); ++n) {
      auto& cand = nodes_[n];
      for (std::size_t i = 0; i < cand.sets.size(); ++i) {
        SuffStats fresh;
        accumulate_node_stats(windows, n, cand.sets[i], cards_, fresh);
        if (mode_ == Mode::pooled) {
          for (auto& [key, st] : fresh) {
            cand.pooled[i][key].merge(st);
            cand.cache[i].erase(key);
          }
        } else {
          for (const auto& [key, st] : fresh) cand.accumulated[i] += key_log_marginal(key, st, family_, priors_);
        }
      }
    }
    ++count_;
  }

  ParentSetPosterior posterior() {
    ParentSetPosterior post;
    post.nodes.resize(nodes_.size());
    for (NodeId n = 0; n < nodes_.size(); ++n) {
      auto& cand = nodes_[n];
      NodePosterior& out = post.nodes[n];
      out.sets = cand.sets;
      out.log_marginal.assign(cand.sets.size(), 0.0);
      for (std::size_t i = 0; i < cand.sets.size(); ++i) {
        if (mode_ == Mode::pooled) {
          double total = 0.0;
          for (const auto& [key, st] : cand.pooled[i]) {
            auto it = cand.cache[i].find(key);
            if (it == cand.cache[i].end())
              it = cand.cache[i].emplace(key, key_log_marginal(key, st, family_, priors_)).first;
            total += it->second;
          }
          out.log_marginal[i] = total;
        } else {
          out.log_marginal[i] = cand.accumulated[i];
        }
      }
      normalize_node(out, graph_prior_);
    }
    return post;
  }

private:
  struct Candidates {
    std::vector<std::vector<NodeId>> sets;
    std::vector<SuffStats> pooled;
    std::vector<std::map<ParamKey, double>> cache;
    std::vector<double> accumulated;
  };

  std::vector<std::size_t> cards_;
  Family family_;
  MarginalPriors priors_;
  GraphPrior graph_prior_;
  Mode mode_;
  std::vector<Candidates> nodes_;
  std::size_t count_ = 0;
};

/// Batch posterior over all parent sets of size <= max_indegree.
inline ParentSetPosterior graph_posterior(const std::vector<Trajectory>& trajs,
                                          std::span<const std::size_t> cardinalities, Family family,
                                          std::size_t max_indegree, const MarginalPriors& priors = {},
                                          const GraphPrior& graph_prior = {}) {
  StructureLearner learner({cardinalities.begin(), cardinalities.end()}, family, max_indegree, priors, graph_prior);
  for (const auto& t : trajs) learner.add(t);
  return learner.posterior();
}

/// Graph made of each node's highest-weight parent set.
inline Graph map_graph(const ParentSetPosterior& post) {
  std::vector<std::vector<NodeId>> parents(post.nodes.size());
  for (NodeId n = 0; n < post.nodes.size(); ++n) {
    const auto& w = post.nodes[n].log_weight;
    const auto best = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    parents[n] = post.nodes[n].sets[best];
  }
  return Graph::from_parents(parents);
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

namespace detail {

inline void off_diagonal(const std::vector<std::vector<double>>& scores, const std::vector<std::vector<double>>& truth,
                         std::vector<double>& s, std::vector<bool>& y) {
  const std::size_t n = scores.size();
  if (truth.size() != n) throw ModelError("score and truth matrices differ in size");
  for (std::size_t i = 0; i < n; ++i) {
    if (scores[i].size() != n || truth[i].size() != n) throw ModelError("matrices must be square");
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      s.push_back(scores[i][j]);
      y.push_back(truth[i][j] != 0.0);
    }
  }
}

}  // namespace detail

/// Mann-Whitney AUROC over labelled scores; ties get midranks.
inline double auroc(std::span<const double> scores, const std::vector<bool>& labels) {
  const std::size_t m = scores.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(m);
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j + 1 < m && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (labels[i]) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  const double neg = static_cast<double>(m) - pos;
  if (pos == 0.0 || neg == 0.0) throw ModelError("AUROC needs at least one positive and one negative");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

/// Area under the precision-recall curve with step interpolation over the
/// distinct score thresholds.
inline double aupr(std::span<const double> scores, const std::vector<bool>& labels) {
  const std::size_t m = scores.size();
  double pos = 0.0;
  for (bool l : labels) pos += l ? 1.0 : 0.0;
  if (pos == 0.0 || pos == static_cast<double>(m))
    throw ModelError("AUPR needs at least one positive and one negative");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0.0;
  double taken = 0.0;
  double prev_recall = 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j < m && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) tp += 1.0;
      taken += 1.0;
      ++j;
    }
    const double recall = tp / pos;
    const double precision = tp / taken;
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

inline double auroc(const std::vector<std::vector<double>>& scores, const std::vector<std::vector<double>>& truth) {
  std::vector<double> s;
  std::vector<bool> y;
  detail::off_diagonal(scores, truth, s, y);
  return auroc(s, y);
}

inline double aupr(const std::vector<std::vector<double>>& scores, const std::vector<std::vector<double>>& truth) {
  std::vector<double> s;
  std::vector<bool> y;
  detail::off_diagonal(scores, truth, s, y);
  return aupr(s, y);
}

}  // namespace clockctbn

#endif  // CLOCKCTBN_INFER_STRUCTURE_HPP
