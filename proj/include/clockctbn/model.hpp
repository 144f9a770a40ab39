#ifndef CLOCKCTBN_MODEL_HPP
#define CLOCKCTBN_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clockctbn/errors.hpp"

namespace clockctbn {

using NodeId = std::size_t;
using LocalState = int;

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

/// Directed dependency graph. Cycles are allowed, self-loops are not.
class Graph {
public:
  Graph() = default;

  explicit Graph(std::size_t num_nodes, std::set<std::pair<NodeId, NodeId>> edges = {})
      : num_nodes_(num_nodes), edges_(std::move(edges)) {
    if (num_nodes_ < 1) throw ModelError("graph needs at least one node");
    for (const auto& [src, dst] : edges_) {
      if (src >= num_nodes_ || dst >= num_nodes_)
        throw ModelError("edge (" + std::to_string(src) + "," + std::to_string(dst) +
                         ") references a node outside [0, " + std::to_string(num_nodes_) + ")");
      if (src == dst) throw ModelError("self-loop on node " + std::to_string(src));
    }
    parents_.assign(num_nodes_, {});
    for (const auto& [src, dst] : edges_) parents_[dst].push_back(src);
    for (auto& p : parents_) std::sort(p.begin(), p.end());
  }

  /// Graph from per-node parent lists.
  static Graph from_parents(const std::vector<std::vector<NodeId>>& parents) {
    std::set<std::pair<NodeId, NodeId>> edges;
    for (NodeId n = 0; n < parents.size(); ++n)
      for (NodeId m : parents[n]) edges.emplace(m, n);
    return Graph(parents.size(), std::move(edges));
  }

  std::size_t num_nodes() const { return num_nodes_; }
  const std::set<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  const std::vector<NodeId>& parents(NodeId n) const { return parents_.at(n); }
  bool has_edge(NodeId src, NodeId dst) const { return edges_.count({src, dst}) > 0; }

  /// Dense 0/1 adjacency, entry (m, n) = 1 iff m -> n.
  std::vector<std::vector<double>> adjacency() const {
    std::vector<std::vector<double>> a(num_nodes_, std::vector<double>(num_nodes_, 0.0));
    for (const auto& [src, dst] : edges_) a[src][dst] = 1.0;
    return a;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
  }

private:
  std::size_t num_nodes_ = 0;
  std::set<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::vector<NodeId>> parents_;
};

// ---------------------------------------------------------------------------
// Survival parameters
// ---------------------------------------------------------------------------

enum class Family { exponential, weibull, gamma, rayleigh };

inline constexpr std::size_t family_arity(Family f) {
  switch (f) {
    case Family::exponential: return 1;
    case Family::weibull: return 2;
    case Family::gamma: return 2;
    case Family::rayleigh: return 1;
  }
  return 0;
}

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::exponential: return "exponential";
    case Family::weibull: return "weibull";
    case Family::gamma: return "gamma";
    case Family::rayleigh: return "rayleigh";
  }
  return "unknown";
}

inline Family parse_family(std::string_view name) {
  if (name == "exponential") return Family::exponential;
  if (name == "weibull") return Family::weibull;
  if (name == "gamma") return Family::gamma;
  if (name == "rayleigh") return Family::rayleigh;
  throw ModelError("unknown survival family '" + std::string(name) + "'");
}

/// One parametric survival-time distribution.
///
/// Parameter order: exponential (rate), weibull (shape k, rate b),
/// gamma (shape alpha, rate beta), rayleigh (sigma^2).
class SurvivalParams {
public:
  SurvivalParams(Family family, std::span<const double> values) : family_(family) {
    if (values.size() != family_arity(family))
      throw ModelError(std::string(family_name(family)) + " expects " +
                       std::to_string(family_arity(family)) + " parameter(s), got " +
                       std::to_string(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0) || !std::isfinite(values[i]))
        throw ModelError(std::string(family_name(family)) +
                         " parameters must be finite and strictly positive");
      values_[i] = values[i];
    }
  }

  SurvivalParams(Family family, std::initializer_list<double> values)
      : SurvivalParams(family, std::span<const double>(values.begin(), values.size())) {}

  static SurvivalParams exponential(double rate) { return {Family::exponential, {rate}}; }
  static SurvivalParams weibull(double shape, double rate) { return {Family::weibull, {shape, rate}}; }
  static SurvivalParams gamma(double shape, double rate) { return {Family::gamma, {shape, rate}}; }
  static SurvivalParams rayleigh(double sigma2) { return {Family::rayleigh, {sigma2}}; }

  Family family() const { return family_; }
  std::size_t size() const { return family_arity(family_); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::vector<double> values() const { return {values_.begin(), values_.begin() + size()}; }

  friend bool operator==(const SurvivalParams& a, const SurvivalParams& b) {
    return a.family_ == b.family_ && a.values_ == b.values_;
  }

private:
  Family family_;
  std::array<double, 2> values_{};
};

// ---------------------------------------------------------------------------
// Parameter tables
// ---------------------------------------------------------------------------

/// (node, local state, parent-state index): the unit at which survival and
/// transition parameters are defined.
struct ParamKey {
  NodeId node = 0;
  LocalState state = 0;
  std::size_t parent_state = 0;

  friend auto operator<=>(const ParamKey&, const ParamKey&) = default;

  /// "n/x/u" form used in model files.
  std::string str() const {
    return std::to_string(node) + "/" + std::to_string(state) + "/" + std::to_string(parent_state);
  }

  static ParamKey parse(std::string_view text) {
    ParamKey key;
    std::array<std::size_t, 3> parts{};
    std::size_t field = 0;
    std::size_t value = 0;
    bool any = false;
    for (char c : text) {
      if (c == '/') {
        if (!any || field >= 2) throw ModelError("malformed parameter key '" + std::string(text) + "'");
        parts[field++] = value;
        value = 0;
        any = false;
      } else if (c >= '0' && c <= '9') {
        value = value * 10 + static_cast<std::size_t>(c - '0');
        any = true;
      } else {
        throw ModelError("malformed parameter key '" + std::string(text) + "'");
      }
    }
    if (!any || field != 2) throw ModelError("malformed parameter key '" + std::string(text) + "'");
    parts[2] = value;
    key.node = parts[0];
    key.state = static_cast<LocalState>(parts[1]);
    key.parent_state = parts[2];
    return key;
  }
};

/// Number of joint parent configurations of node n.
inline std::size_t num_parent_states(std::span<const NodeId> parents,
                                     std::span<const std::size_t> cardinalities) {
  std::size_t count = 1;
  for (NodeId p : parents) count *= cardinalities[p];
  return count;
}

/// Mixed-radix parent-state index over ascending parent ids; the lowest id is
/// the least significant digit.
inline std::size_t parent_state_index(std::span<const NodeId> parents,
                                      std::span<const std::size_t> cardinalities,
                                      std::span<const LocalState> states) {
  std::size_t index = 0;
  std::size_t radix = 1;
  for (NodeId p : parents) {
    index += static_cast<std::size_t>(states[p]) * radix;
    radix *= cardinalities[p];
  }
  return index;
}

inline void validate_transition_row(std::span<const double> row, LocalState from,
                                    const std::string& where) {
  double total = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!(row[i] >= 0.0) || !std::isfinite(row[i]))
      throw ModelError("transition probabilities for " + where + " must be finite and nonnegative");
    total += row[i];
  }
  if (row[static_cast<std::size_t>(from)] != 0.0)
    throw ModelError("transition probabilities for " + where + " put mass on the current state");
  if (std::abs(total - 1.0) > 1e-12)
    throw ModelError("transition probabilities for " + where + " do not sum to 1");
}

/// Graph, state spaces and the full (phi, theta) parameter tables.
///
/// Tables are stored densely per node, indexed by parent state then local state.
class NetworkModel {
public:
  NetworkModel(Graph graph, std::vector<std::size_t> cardinalities, Family family,
               std::map<ParamKey, SurvivalParams> phi, std::map<ParamKey, std::vector<double>> theta)
      : graph_(std::move(graph)), cardinalities_(std::move(cardinalities)), family_(family) {
    const std::size_t n_nodes = graph_.num_nodes();
    if (cardinalities_.size() != n_nodes)
      throw ModelError("cardinality list length does not match the number of nodes");
    for (auto c : cardinalities_)
      if (c < 2) throw ModelError("every node needs at least two local states");

    offsets_.resize(n_nodes + 1, 0);
    for (NodeId n = 0; n < n_nodes; ++n)
      offsets_[n + 1] = offsets_[n] + clockctbn::num_parent_states(graph_.parents(n), cardinalities_) *
                                          cardinalities_[n];
    const std::size_t total = offsets_.back();
    phi_.reserve(total);
    theta_.reserve(total);
    for (NodeId n = 0; n < n_nodes; ++n) {
      const std::size_t n_u = clockctbn::num_parent_states(graph_.parents(n), cardinalities_);
      for (std::size_t u = 0; u < n_u; ++u) {
        for (std::size_t x = 0; x < cardinalities_[n]; ++x) {
          const ParamKey key{n, static_cast<LocalState>(x), u};
          auto p = phi.find(key);
          if (p == phi.end()) throw ModelError("missing phi entry for key " + key.str());
          if (p->second.family() != family_)
            throw ModelError("phi entry " + key.str() + " has the wrong family");
          phi_.push_back(p->second);
          auto t = theta.find(key);
          if (t == theta.end()) throw ModelError("missing theta entry for key " + key.str());
          if (t->second.size() != cardinalities_[n])
            throw ModelError("theta entry " + key.str() + " has the wrong length");
          validate_transition_row(t->second, key.state, "key " + key.str());
          theta_.push_back(t->second);
        }
      }
    }
    if (phi.size() != total || theta.size() != total)
      throw ModelError("parameter tables contain keys that do not exist in the model");
  }

  const Graph& graph() const { return graph_; }
  std::size_t num_nodes() const { return graph_.num_nodes(); }
  const std::vector<std::size_t>& cardinalities() const { return cardinalities_; }
  std::size_t cardinality(NodeId n) const { return cardinalities_[n]; }
  Family family() const { return family_; }

  std::size_t num_parent_states(NodeId n) const {
    return clockctbn::num_parent_states(graph_.parents(n), cardinalities_);
  }

  std::size_t parent_state_index(NodeId n, std::span<const LocalState> states) const {
    return clockctbn::parent_state_index(graph_.parents(n), cardinalities_, states);
  }

  const SurvivalParams& phi(NodeId n, LocalState x, std::size_t u) const {
    return phi_[slot(n, x, u)];
  }
  const SurvivalParams& phi(const ParamKey& k) const { return phi(k.node, k.state, k.parent_state); }

  const std::vector<double>& theta(NodeId n, LocalState x, std::size_t u) const {
    return theta_[slot(n, x, u)];
  }
  const std::vector<double>& theta(const ParamKey& k) const {
    return theta(k.node, k.state, k.parent_state);
  }

  /// Every key of the model in (node, parent state, local state) order.
  std::vector<ParamKey> keys() const {
    std::vector<ParamKey> out;
    out.reserve(phi_.size());
    for (NodeId n = 0; n < num_nodes(); ++n)
      for (std::size_t u = 0; u < num_parent_states(n); ++u)
        for (std::size_t x = 0; x < cardinalities_[n]; ++x)
          out.push_back({n, static_cast<LocalState>(x), u});
    return out;
  }

  std::map<ParamKey, SurvivalParams> phi_table() const {
    std::map<ParamKey, SurvivalParams> out;
    for (const auto& k : keys()) out.emplace(k, phi(k));
    return out;
  }

  std::map<ParamKey, std::vector<double>> theta_table() const {
    std::map<ParamKey, std::vector<double>> out;
    for (const auto& k : keys()) out.emplace(k, theta(k));
    return out;
  }

private:
  std::size_t slot(NodeId n, LocalState x, std::size_t u) const {
    return offsets_[n] + u * cardinalities_[n] + static_cast<std::size_t>(x);
  }

  Graph graph_;
  std::vector<std::size_t> cardinalities_;
  Family family_;
  std::vector<std::size_t> offsets_;
  std::vector<SurvivalParams> phi_;
  std::vector<std::vector<double>> theta_;
};

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Local states plus the per-node clocks (time since each node's last jump).
struct ClockedState {
  std::vector<LocalState> states;
  std::vector<double> clocks;

  ClockedState() = default;
  ClockedState(std::vector<LocalState> s, std::vector<double> c)
      : states(std::move(s)), clocks(std::move(c)) {
    if (states.size() != clocks.size()) throw ModelError("state and clock vectors differ in length");
    for (double t : clocks)
      if (!(t >= 0.0) || !std::isfinite(t)) throw ModelError("clocks must be finite and nonnegative");
  }

  /// All clocks zero.
  static ClockedState at_rest(std::vector<LocalState> s) {
    std::vector<double> c(s.size(), 0.0);
    return {std::move(s), std::move(c)};
  }

  std::size_t size() const { return states.size(); }

  friend bool operator==(const ClockedState&, const ClockedState&) = default;
};

struct Event {
  double time = 0.0;
  NodeId node = 0;
  LocalState state = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Trajectory {
  ClockedState initial;
  std::vector<Event> events;
  double end_time = 0.0;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Checks ordering and single-node-change invariants; cardinalities are
/// optional (empty span skips the range check).
inline void validate_trajectory(const Trajectory& traj,
                                std::span<const std::size_t> cardinalities = {}) {
  const std::size_t n_nodes = traj.initial.size();
  if (n_nodes == 0) throw InvalidTrajectory("empty initial state");
  if (traj.initial.clocks.size() != n_nodes) throw InvalidTrajectory("clock vector length mismatch");
  if (!cardinalities.empty() && cardinalities.size() != n_nodes)
    throw InvalidTrajectory("state vector length does not match the model");
  if (!(traj.end_time > 0.0) || !std::isfinite(traj.end_time))
    throw InvalidTrajectory("end time must be positive and finite");
  std::vector<LocalState> current = traj.initial.states;
  for (NodeId n = 0; n < n_nodes; ++n) {
    if (current[n] < 0) throw InvalidTrajectory("negative local state");
    if (!cardinalities.empty() && static_cast<std::size_t>(current[n]) >= cardinalities[n])
      throw InvalidTrajectory("initial state of node " + std::to_string(n) + " out of range");
  }
  double last = 0.0;
  for (std::size_t i = 0; i < traj.events.size(); ++i) {
    const Event& e = traj.events[i];
    if (!std::isfinite(e.time) || e.time < 0.0 || e.time >= traj.end_time)
      throw InvalidTrajectory("event " + std::to_string(i) + " lies outside [0, end_time)");
    if (i > 0 && !(e.time > last))
      throw InvalidTrajectory("event times are not strictly increasing at event " + std::to_string(i));
    if (e.node >= n_nodes) throw InvalidTrajectory("event " + std::to_string(i) + " names an unknown node");
    if (e.state < 0 || (!cardinalities.empty() && static_cast<std::size_t>(e.state) >= cardinalities[e.node]))
      throw InvalidTrajectory("event " + std::to_string(i) + " has an out-of-range state");
    if (current[e.node] == e.state)
      throw InvalidTrajectory("event " + std::to_string(i) + " does not change the node's state");
    current[e.node] = e.state;
    last = e.time;
  }
}

struct Transition {
  NodeId node = 0;
  LocalState new_state = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Holding period between consecutive events. An empty outcome means the
/// window was cut off by the end of observation. `end` is the absolute time
/// at which the window closes.
struct Window {
  ClockedState entry;
  double duration = 0.0;
  double end = 0.0;
  std::optional<Transition> outcome;

  bool censored() const { return !outcome.has_value(); }
};

/// Splits a trajectory into windows, propagating the clocks: the jumping
/// node resets to zero, every other clock ages by the window duration.
inline std::vector<Window> derive_windows(const Trajectory& traj) {
  validate_trajectory(traj);
  std::vector<Window> windows;
  windows.reserve(traj.events.size() + 1);
  ClockedState state = traj.initial;
  double t = 0.0;
  for (const Event& e : traj.events) {
    const double s = e.time - t;
    if (!(s > 0.0)) throw InvalidTrajectory("zero-length window at t=" + std::to_string(e.time));
    windows.push_back({state, s, e.time, Transition{e.node, e.state}});
    for (NodeId m = 0; m < state.size(); ++m) state.clocks[m] += s;
    state.clocks[e.node] = 0.0;
    state.states[e.node] = e.state;
    t = e.time;
  }
  windows.push_back({state, traj.end_time - t, traj.end_time, std::nullopt});
  return windows;
}

/// Inverse of derive_windows.
inline Trajectory assemble_trajectory(std::span<const Window> windows) {
  if (windows.empty()) throw InvalidTrajectory("no windows");
  Trajectory traj;
  traj.initial = windows.front().entry;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    if (w.outcome) {
      if (i + 1 >= windows.size()) throw InvalidTrajectory("last window must be censored");
      traj.events.push_back({w.end, w.outcome->node, w.outcome->new_state});
    } else {
      if (i + 1 != windows.size()) throw InvalidTrajectory("censored window before the end");
      traj.end_time = w.end;
    }
  }
  return traj;
}

}  // namespace clockctbn

#endif  // CLOCKCTBN_MODEL_HPP
