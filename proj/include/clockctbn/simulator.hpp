#ifndef CLOCKCTBN_SIMULATOR_HPP
#define CLOCKCTBN_SIMULATOR_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "clockctbn/model.hpp"
#include "clockctbn/special_functions.hpp"
#include "clockctbn/survival.hpp"

namespace clockctbn {

/// Survival parameters currently governing node n in the given state.
inline const SurvivalParams& active_phi(const NetworkModel& model, const ClockedState& state, NodeId n) {
  return model.phi(n, state.states[n], model.parent_state_index(n, state.states));
}

inline const std::vector<double>& active_theta(const NetworkModel& model, const ClockedState& state,
                                               NodeId n) {
  return model.theta(n, state.states[n], model.parent_state_index(n, state.states));
}

/// log of the global survival function: the probability that no node jumps
/// within s of entering `state`, each node truncated at its own clock.
inline double global_log_survival(const NetworkModel& model, const ClockedState& state, double s) {
  double total = 0.0;
  for (NodeId n = 0; n < model.num_nodes(); ++n) {
    const auto& p = active_phi(model, state, n);
    const double tau = state.clocks[n];
    total += log_survival(p, s + tau) - log_survival(p, tau);
  }
  return total;
}

/// log density of the global holding time at s, as the log-sum over nodes of
/// each node's truncated density times every other node's survival ratio.
inline double global_survival_log_density(const NetworkModel& model, const ClockedState& state,
                                          double s) {
  if (!(s > 0.0)) throw std::domain_error("global_survival_log_density: s must be positive");
  const std::size_t n_nodes = model.num_nodes();
  std::vector<double> ratio(n_nodes);
  std::vector<double> own(n_nodes);
  double global = 0.0;
  for (NodeId n = 0; n < n_nodes; ++n) {
    const auto& p = active_phi(model, state, n);
    const double tau = state.clocks[n];
    const double log_trunc = log_survival(p, tau);
    ratio[n] = log_survival(p, s + tau) - log_trunc;
    own[n] = log_density(p, s + tau) - log_trunc;
    global += ratio[n];
  }
  double acc = special::neg_inf;
  for (NodeId n = 0; n < n_nodes; ++n) acc = special::log_add_exp(acc, own[n] + (global - ratio[n]));
  return acc;
}

struct TransitionCategoricals {
  std::vector<double> node_probs;
  /// Row n: distribution over node n's next local state.
  std::vector<std::vector<double>> next_state_probs;
};

/// Which node jumps at holding time s (probabilities proportional to the
/// hazards at the aged clocks) and where it goes (its theta row).
inline TransitionCategoricals transition_categoricals(const NetworkModel& model,
                                                      const ClockedState& state, double s) {
  const std::size_t n_nodes = model.num_nodes();
  TransitionCategoricals out;
  out.node_probs.resize(n_nodes);
  out.next_state_probs.resize(n_nodes);
  std::vector<double> log_h(n_nodes);
  double log_total = special::neg_inf;
  for (NodeId n = 0; n < n_nodes; ++n) {
    log_h[n] = log_hazard(active_phi(model, state, n), state.clocks[n] + s);
    log_total = special::log_add_exp(log_total, log_h[n]);
    out.next_state_probs[n] = active_theta(model, state, n);
  }
  if (log_total == special::neg_inf) throw StalledProcess("every node has zero hazard");
  for (NodeId n = 0; n < n_nodes; ++n) out.node_probs[n] = std::exp(log_h[n] - log_total);
  return out;
}

namespace detail {

inline LocalState draw_categorical(const std::vector<double>& probs, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    cumulative += probs[i];
    if (u < cumulative) return static_cast<LocalState>(i);
  }
  return static_cast<LocalState>(last_positive);
}

}  // namespace detail

/// Exact trajectory on [0, end_time] by competing truncated clocks.
///
/// Each step draws a residual for every node from its distribution truncated
/// at the node's clock (nodes 0..N-1 in order), takes the minimum (ties go to
/// the lowest node id), then draws the winner's next state with one more
/// uniform. The step whose jump would reach end_time is discarded and the
/// final window is left censored.
template <class G>
Trajectory gillespie_sample(const NetworkModel& model, const ClockedState& init, double end_time, G& gen,
                            std::size_t max_events = std::numeric_limits<std::size_t>::max()) {
  if (!(end_time > 0.0)) throw std::domain_error("gillespie_sample: end time must be positive");
  const std::size_t n_nodes = model.num_nodes();
  if (init.size() != n_nodes) throw ModelError("initial state has the wrong number of nodes");
  for (NodeId n = 0; n < n_nodes; ++n)
    if (init.states[n] < 0 || static_cast<std::size_t>(init.states[n]) >= model.cardinality(n))
      throw ModelError("initial state of node " + std::to_string(n) + " is out of range");

  Trajectory traj;
  traj.initial = init;
  traj.end_time = end_time;
  ClockedState state = init;
  double t = 0.0;
  while (traj.events.size() < max_events) {
    double best = std::numeric_limits<double>::infinity();
    NodeId winner = 0;
    for (NodeId n = 0; n < n_nodes; ++n) {
      const double r = sample_truncated(active_phi(model, state, n), state.clocks[n], gen);
      if (r < best) {
        best = r;
        winner = n;
      }
    }
    if (!std::isfinite(best)) throw StalledProcess("no node produced a finite holding time");
    const LocalState next = detail::draw_categorical(active_theta(model, state, winner), gen.uniform());
    double t_next = t + best;
    if (t_next >= end_time) break;
    if (t_next <= t) t_next = std::nextafter(t, end_time);
    const double s = t_next - t;
    for (NodeId m = 0; m < n_nodes; ++m) state.clocks[m] += s;
    state.clocks[winner] = 0.0;
    state.states[winner] = next;
    traj.events.push_back({t_next, winner, next});
    t = t_next;
  }
  return traj;
}

/// Trajectory with exactly `num_events` transitions, observed until the time
/// the following transition would have happened.
template <class G>
Trajectory sample_transitions(const NetworkModel& model, const ClockedState& init, std::size_t num_events,
                              G& gen) {
  Trajectory traj = gillespie_sample(model, init, std::numeric_limits<double>::max(), gen, num_events + 1);
  if (traj.events.size() != num_events + 1) throw StalledProcess("trajectory ended early");
  traj.end_time = traj.events.back().time;
  traj.events.pop_back();
  return traj;
}

}  // namespace clockctbn

#endif  // CLOCKCTBN_SIMULATOR_HPP
