#ifndef CLOCKCTBN_LIKELIHOOD_HPP
#define CLOCKCTBN_LIKELIHOOD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "clockctbn/model.hpp"
#include "clockctbn/simulator.hpp"
#include "clockctbn/special_functions.hpp"
#include "clockctbn/survival.hpp"

namespace clockctbn {

// ---------------------------------------------------------------------------
// Sufficient statistics
// ---------------------------------------------------------------------------

/// Clock samples of one (node, state, parent state) key.
///
/// full: clock at the node's own transition. censored: clock when the regime
/// was cut short by a parent change or the end of observation. truncated:
/// clock at regime entry, when nonzero.
struct KeyStats {
  std::vector<double> full;
  std::vector<double> censored;
  std::vector<double> truncated;
  std::vector<std::size_t> target_counts;

  bool empty() const { return full.empty() && censored.empty() && truncated.empty(); }

  void merge(const KeyStats& other) {
    full.insert(full.end(), other.full.begin(), other.full.end());
    censored.insert(censored.end(), other.censored.begin(), other.censored.end());
    truncated.insert(truncated.end(), other.truncated.begin(), other.truncated.end());
    if (target_counts.size() < other.target_counts.size()) target_counts.resize(other.target_counts.size(), 0);
    for (std::size_t i = 0; i < other.target_counts.size(); ++i) target_counts[i] += other.target_counts[i];
  }

  friend bool operator==(const KeyStats&, const KeyStats&) = default;
};

using SuffStats = std::map<ParamKey, KeyStats>;

inline void merge_stats(SuffStats& into, const SuffStats& from) {
  for (const auto& [key, st] : from) into[key].merge(st);
}

/// Statistics of node n under an arbitrary candidate parent set.
///
/// A regime is a maximal run of windows over which n's state and its parents'
/// joint state stay fixed; changes of unrelated nodes do not split it, since
/// their truncation and survival factors telescope.
inline void accumulate_node_stats(std::span<const Window> windows, NodeId n, std::span<const NodeId> parents,
                                  std::span<const std::size_t> cardinalities, SuffStats& out) {
  bool open = false;
  KeyStats* current = nullptr;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const Window& win = windows[w];
    const double tau = win.entry.clocks[n];
    if (!open) {
      const ParamKey key{n, win.entry.states[n], parent_state_index(parents, cardinalities, win.entry.states)};
      current = &out[key];
      if (current->target_counts.size() < cardinalities[n]) current->target_counts.resize(cardinalities[n], 0);
      if (tau > 0.0) current->truncated.push_back(tau);
      open = true;
    }
    const double exit_clock = tau + win.duration;
    if (!win.outcome) {
      current->censored.push_back(exit_clock);
      open = false;
    } else if (win.outcome->node == n) {
      current->full.push_back(exit_clock);
      current->target_counts[static_cast<std::size_t>(win.outcome->new_state)] += 1;
      open = false;
    } else if (std::binary_search(parents.begin(), parents.end(), win.outcome->node)) {
      current->censored.push_back(exit_clock);
      open = false;
    }
  }
}

inline SuffStats node_sufficient_stats(const Trajectory& traj, NodeId n, std::span<const NodeId> parents,
                                       std::span<const std::size_t> cardinalities) {
  validate_trajectory(traj, cardinalities);
  const auto windows = derive_windows(traj);
  SuffStats out;
  accumulate_node_stats(windows, n, parents, cardinalities, out);
  return out;
}

inline SuffStats sufficient_stats(const Trajectory& traj, const Graph& graph,
                                  std::span<const std::size_t> cardinalities) {
  if (graph.num_nodes() != cardinalities.size())
    throw ModelError("cardinality list length does not match the graph");
  validate_trajectory(traj, cardinalities);
  const auto windows = derive_windows(traj);
  SuffStats out;
  for (NodeId n = 0; n < graph.num_nodes(); ++n)
    accumulate_node_stats(windows, n, graph.parents(n), cardinalities, out);
  return out;
}

// ---------------------------------------------------------------------------
// Window product
// ---------------------------------------------------------------------------

/// Log density of one window; per_node (if given) receives each node's share.
inline double window_log_density(const NetworkModel& model, const Window& w,
                                 std::vector<double>* per_node = nullptr) {
  const std::size_t n_nodes = model.num_nodes();
  if (w.entry.size() != n_nodes) throw InvalidTrajectory("window state has the wrong number of nodes");
  double total = 0.0;
  for (NodeId k = 0; k < n_nodes; ++k) {
    const auto& p = active_phi(model, w.entry, k);
    const double tau = w.entry.clocks[k];
    const double log_trunc = log_survival(p, tau);
    double term = 0.0;
    if (w.outcome && w.outcome->node == k) {
      const auto& row = active_theta(model, w.entry, k);
      const double prob = row.at(static_cast<std::size_t>(w.outcome->new_state));
      term = std::log(prob) + log_density(p, tau + w.duration) - log_trunc;
    } else {
      term = log_survival(p, tau + w.duration) - log_trunc;
    }
    if (per_node) (*per_node)[k] += term;
    total += term;
  }
  return total;
}

struct LogLikelihood {
  double total = 0.0;
  std::vector<double> per_node;
  /// Set when a transition has zero probability under the model.
  std::string diagnostic;
};

inline LogLikelihood trajectory_log_likelihood(const NetworkModel& model, const Trajectory& traj) {
  validate_trajectory(traj, model.cardinalities());
  LogLikelihood out;
  out.per_node.assign(model.num_nodes(), 0.0);
  const auto windows = derive_windows(traj);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double v = window_log_density(model, windows[i], &out.per_node);
    if (v == special::neg_inf && out.diagnostic.empty() && windows[i].outcome) {
      const auto& o = *windows[i].outcome;
      out.diagnostic = "transition of node " + std::to_string(o.node) + " to state " +
                       std::to_string(o.new_state) + " at t=" + std::to_string(windows[i].end) +
                       " has zero probability";
    }
    out.total += v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-key survival likelihood
// ---------------------------------------------------------------------------

/// Survival log-likelihood of one key's statistics as a function of the
/// family parameters, with analytic gradient. Sums that do not depend on the
/// parameters are cached at construction.
class KeyLikelihood {
public:
  KeyLikelihood(const KeyStats& stats, Family family) : family_(family) {
    n_full_ = static_cast<double>(stats.full.size());
    for (double s : stats.full) {
      sum_log_full_ += std::log(s);
      sum_full_ += s;
    }
    switch (family_) {
      case Family::exponential:
        for (double s : stats.full) exposure_ += s;
        for (double s : stats.censored) exposure_ += s;
        for (double s : stats.truncated) exposure_ -= s;
        break;
      case Family::rayleigh:
        for (double s : stats.full) exposure_ += s * s;
        for (double s : stats.censored) exposure_ += s * s;
        for (double s : stats.truncated) exposure_ -= s * s;
        exposure_ *= 0.5;
        break;
      case Family::weibull:
        for (double s : stats.full) log_exit_.push_back(std::log(s));
        for (double s : stats.censored) log_exit_.push_back(std::log(s));
        for (double s : stats.truncated) log_entry_.push_back(std::log(s));
        break;
      case Family::gamma:
        censored_ = stats.censored;
        truncated_ = stats.truncated;
        break;
    }
  }

  Family family() const { return family_; }
  double num_full() const { return n_full_; }
  double sum_log_full() const { return sum_log_full_; }

  /// Sum of s over exits minus entries (exponential) or half the sum of s^2
  /// (rayleigh): the statistic multiplying the rate.
  double exposure() const { return exposure_; }

  double value(std::span<const double> p) const { return evaluate(p, nullptr); }

  double value_and_gradient(std::span<const double> p, std::span<double> grad) const {
    return evaluate(p, grad.data());
  }

  /// For Weibull: log of A(k) = sum_{exits} s^k - sum_{entries} s^k, and
  /// A'(k)/A(k). log A = -inf when there is no exposure.
  std::pair<double, double> weibull_log_exposure(double k) const {
    double m = special::neg_inf;
    for (double ls : log_exit_) m = std::max(m, k * ls);
    for (double ls : log_entry_) m = std::max(m, k * ls);
    if (m == special::neg_inf) return {special::neg_inf, 0.0};
    double a = 0.0;
    double da = 0.0;
    for (double ls : log_exit_) {
      const double e = std::exp(k * ls - m);
      a += e;
      da += ls * e;
    }
    for (double ls : log_entry_) {
      const double e = std::exp(k * ls - m);
      a -= e;
      da -= ls * e;
    }
    if (!(a > 0.0)) return {special::neg_inf, 0.0};
    return {m + std::log(a), da / a};
  }

private:
  double evaluate(std::span<const double> p, double* grad) const {
    switch (family_) {
      case Family::exponential: {
        const double rate = p[0];
        if (grad) grad[0] = n_full_ / rate - exposure_;
        return n_full_ * std::log(rate) - rate * exposure_;
      }
      case Family::rayleigh: {
        const double v = p[0];
        if (grad) grad[0] = -n_full_ / v + exposure_ / (v * v);
        return sum_log_full_ - n_full_ * std::log(v) - exposure_ / v;
      }
      case Family::weibull: {
        const double k = p[0];
        const double b = p[1];
        const auto [log_a, dlog_a] = weibull_log_exposure(k);
        const double ba = log_a == special::neg_inf ? 0.0 : std::exp(std::log(b) + log_a);
        if (grad) {
          grad[0] = n_full_ / k + sum_log_full_ - ba * dlog_a;
          grad[1] = n_full_ / b - (log_a == special::neg_inf ? 0.0 : std::exp(log_a));
        }
        double v = (k - 1.0) * sum_log_full_ - ba;
        if (n_full_ > 0.0) v += n_full_ * (std::log(b) + std::log(k));
        return v;
      }
      case Family::gamma: {
        const double a = p[0];
        const double b = p[1];
        double v = (a - 1.0) * sum_log_full_ - b * sum_full_;
        if (n_full_ > 0.0) v += n_full_ * (a * std::log(b) - std::lgamma(a));
        double da = n_full_ > 0.0 ? n_full_ * (std::log(b) - boost::math::digamma(a)) + sum_log_full_ : 0.0;
        double db = n_full_ > 0.0 ? n_full_ * a / b - sum_full_ : 0.0;
        for (double s : censored_) {
          v += special::log_gamma_q(a, b * s);
          if (grad) {
            da += special::d_log_gamma_q_da(a, b * s);
            db += s * special::d_log_gamma_q_dx(a, b * s);
          }
        }
        for (double s : truncated_) {
          v -= special::log_gamma_q(a, b * s);
          if (grad) {
            da -= special::d_log_gamma_q_da(a, b * s);
            db -= s * special::d_log_gamma_q_dx(a, b * s);
          }
        }
        if (grad) {
          grad[0] = da;
          grad[1] = db;
        }
        return v;
      }
    }
    return 0.0;
  }

  Family family_;
  double n_full_ = 0.0;
  double sum_log_full_ = 0.0;
  double sum_full_ = 0.0;
  double exposure_ = 0.0;
  std::vector<double> log_exit_;
  std::vector<double> log_entry_;
  std::vector<double> censored_;
  std::vector<double> truncated_;
};

/// Survival log-likelihood of one key: sum over S_f of log f, plus sum over
/// S_c of log Lambda, minus sum over S_t of log Lambda.
inline double stats_log_likelihood(const KeyStats& stats, const SurvivalParams& p) {
  if (stats.empty()) return 0.0;
  const auto values = p.values();
  return KeyLikelihood(stats, p.family()).value(values);
}

/// Embedded-chain term: sum of target counts times log theta.
inline double theta_log_likelihood(const KeyStats& stats, std::span<const double> theta_row) {
  double v = 0.0;
  for (std::size_t x = 0; x < stats.target_counts.size(); ++x)
    if (stats.target_counts[x] > 0) v += static_cast<double>(stats.target_counts[x]) * std::log(theta_row[x]);
  return v;
}

/// The same path measure assembled key by key from sufficient statistics.
inline double stats_total_log_likelihood(const NetworkModel& model, const SuffStats& stats) {
  double total = 0.0;
  for (const auto& [key, st] : stats) {
    total += stats_log_likelihood(st, model.phi(key));
    total += theta_log_likelihood(st, model.theta(key));
  }
  return total;
}

}  // namespace clockctbn

#endif  // CLOCKCTBN_LIKELIHOOD_HPP
