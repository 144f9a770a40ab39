#ifndef CLOCKCTBN_EXPERIMENTS_HPP
#define CLOCKCTBN_EXPERIMENTS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "clockctbn/errors.hpp"
#include "clockctbn/infer_params.hpp"
#include "clockctbn/infer_structure.hpp"
#include "clockctbn/likelihood.hpp"
#include "clockctbn/model.hpp"
#include "clockctbn/random.hpp"
#include "clockctbn/simulator.hpp"

namespace clockctbn::experiments {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Gamma(shape, rate) hyperpriors from which survival parameters are drawn.
struct HyperPrior {
  double shape_a = 8.0;
  double shape_b = 0.5;
  double rate_a = 5.0;
  double rate_b = 3.0;

  static HyperPrior for_family(Family f) {
    if (f == Family::gamma) return {40.0, 5.0, 25.0, 2.5};
    return {};
  }
};

enum class Kind { mse, structure, shape_sweep };

struct ExperimentConfig {
  std::size_t num_nodes = 4;
  std::size_t cardinality = 2;
  Family family = Family::weibull;
  /// In-degree cap of generated graphs and of the candidate parent sets.
  std::size_t max_indegree = 3;
  std::uint64_t seed = 1;
  HyperPrior hyper = HyperPrior::for_family(Family::weibull);
  double box_lower = 0.1;
  double box_upper = 100.0;
  GraphPrior graph_prior;

  // mse
  std::size_t replicates = 50;
  std::vector<std::size_t> sizes{10, 100, 1000};

  // structure and shape sweep
  std::size_t graphs = 20;
  std::size_t trajectories = 100;
  double horizon = 5.0;
  /// Trajectory counts after which scores are recorded; empty = after each.
  std::vector<std::size_t> checkpoints;
  std::vector<double> shapes{1.0, 3.0, 5.0, 7.0, 9.0};

  std::size_t threads = 1;
};

inline ExperimentConfig default_config(Kind kind, bool paper_scale) {
  ExperimentConfig c;
  switch (kind) {
    case Kind::mse:
      if (paper_scale) {
        c.replicates = 1000;
        c.sizes = {10, 100, 1000, 10000};
      }
      break;
    case Kind::structure:
      if (paper_scale) c.graphs = 500;
      break;
    case Kind::shape_sweep:
      c.graphs = paper_scale ? 100 : 10;
      c.trajectories = 50;
      break;
  }
  return c;
}

/// Overlays the keys present in `j` on the defaults; unknown keys are errors.
inline ExperimentConfig config_from_json(const json& j, Kind kind, bool paper_scale = false) {
  ExperimentConfig c = default_config(kind, paper_scale);
  if (!j.is_object()) throw ModelError("experiment config must be a JSON object");
  bool hyper_given = false;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "num_nodes") c.num_nodes = v.get<std::size_t>();
      else if (key == "cardinality") c.cardinality = v.get<std::size_t>();
      else if (key == "family") c.family = parse_family(v.get<std::string>());
      else if (key == "max_indegree") c.max_indegree = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "hyperprior") {
        c.hyper.shape_a = v.at("shape").at(0).get<double>();
        c.hyper.shape_b = v.at("shape").at(1).get<double>();
        c.hyper.rate_a = v.at("rate").at(0).get<double>();
        c.hyper.rate_b = v.at("rate").at(1).get<double>();
        hyper_given = true;
      } else if (key == "box") {
        c.box_lower = v.at(0).get<double>();
        c.box_upper = v.at(1).get<double>();
      } else if (key == "edge_penalty") {
        c.graph_prior.kind = GraphPrior::Kind::edge_penalty;
        c.graph_prior.rho = v.get<double>();
      } else if (key == "replicates") c.replicates = v.get<std::size_t>();
      else if (key == "sizes") c.sizes = v.get<std::vector<std::size_t>>();
      else if (key == "graphs") c.graphs = v.get<std::size_t>();
      else if (key == "trajectories") c.trajectories = v.get<std::size_t>();
      else if (key == "horizon") c.horizon = v.get<double>();
      else if (key == "checkpoints") c.checkpoints = v.get<std::vector<std::size_t>>();
      else if (key == "shapes") c.shapes = v.get<std::vector<double>>();
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else throw ModelError("unknown experiment config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed experiment config: ") + e.what());
  }
  if (!hyper_given) c.hyper = HyperPrior::for_family(c.family);
  if (c.num_nodes < 2) throw ModelError("num_nodes must be at least 2");
  if (c.cardinality < 2) throw ModelError("cardinality must be at least 2");
  if (c.replicates == 0 || c.graphs == 0 || c.trajectories == 0) throw ModelError("counts must be positive");
  if (c.sizes.empty()) throw ModelError("sizes must not be empty");
  for (auto s : c.sizes)
    if (s == 0) throw ModelError("sizes must be positive");
  if (!(c.horizon > 0.0)) throw ModelError("horizon must be positive");
  for (auto k : c.checkpoints)
    if (k == 0 || k > c.trajectories) throw ModelError("checkpoints must lie in [1, trajectories]");
  for (double k : c.shapes)
    if (!(k > 0.0)) throw ModelError("shapes must be positive");
  if (kind == Kind::shape_sweep && c.family != Family::weibull)
    throw ModelError("the shape sweep needs the weibull family");
  if (c.threads == 0) c.threads = 1;
  return c;
}

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["num_nodes"] = c.num_nodes;
  j["cardinality"] = c.cardinality;
  j["family"] = std::string(family_name(c.family));
  j["max_indegree"] = c.max_indegree;
  j["seed"] = c.seed;
  j["hyperprior"] = {{"shape", {c.hyper.shape_a, c.hyper.shape_b}}, {"rate", {c.hyper.rate_a, c.hyper.rate_b}}};
  j["box"] = {c.box_lower, c.box_upper};
  if (c.graph_prior.kind == GraphPrior::Kind::edge_penalty) j["edge_penalty"] = c.graph_prior.rho;
  j["replicates"] = c.replicates;
  j["sizes"] = c.sizes;
  j["graphs"] = c.graphs;
  j["trajectories"] = c.trajectories;
  j["horizon"] = c.horizon;
  j["checkpoints"] = c.checkpoints;
  j["shapes"] = c.shapes;
  return j;
}

// ---------------------------------------------------------------------------
// Random models
// ---------------------------------------------------------------------------

/// Each node draws its in-degree uniformly from {0..max_indegree}, then takes
/// as parents the nodes with the largest weights of a flat Dirichlet draw over
/// the other nodes (ties to the lower index).
inline Graph random_graph(std::size_t num_nodes, std::size_t max_indegree, Rng& rng) {
  if (num_nodes < 2) throw ModelError("random_graph needs at least two nodes");
  const std::size_t cap = std::min(max_indegree, num_nodes - 1);
  std::vector<std::vector<NodeId>> parents(num_nodes);
  for (NodeId n = 0; n < num_nodes; ++n) {
    const std::size_t degree = rng.uniform_index(0, cap);
    const auto w = rng.dirichlet(num_nodes - 1);
    std::vector<NodeId> others;
    for (NodeId m = 0; m < num_nodes; ++m)
      if (m != n) others.push_back(m);
    std::vector<std::size_t> order(others.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
    for (std::size_t i = 0; i < degree; ++i) parents[n].push_back(others[order[i]]);
    std::sort(parents[n].begin(), parents[n].end());
  }
  return Graph::from_parents(parents);
}

/// Survival parameters from the Gamma hyperpriors and flat-Dirichlet
/// transition rows, key by key in (node, parent state, state) order. A fixed
/// shape pins every shape parameter and skips its draw.
inline NetworkModel random_params(const Graph& graph, const std::vector<std::size_t>& cardinalities, Family family,
                                  const HyperPrior& hyper, Rng& rng, std::optional<double> fixed_shape = {}) {
  std::map<ParamKey, SurvivalParams> phi;
  std::map<ParamKey, std::vector<double>> theta;
  for (NodeId n = 0; n < graph.num_nodes(); ++n) {
    const std::size_t n_u = num_parent_states(graph.parents(n), cardinalities);
    for (std::size_t u = 0; u < n_u; ++u)
      for (std::size_t x = 0; x < cardinalities[n]; ++x) {
        const ParamKey key{n, static_cast<LocalState>(x), u};
        switch (family) {
          case Family::weibull:
          case Family::gamma: {
            const double shape = fixed_shape ? *fixed_shape : rng.gamma(hyper.shape_a, hyper.shape_b);
            const double rate = rng.gamma(hyper.rate_a, hyper.rate_b);
            phi.emplace(key, SurvivalParams(family, {shape, rate}));
            break;
          }
          case Family::exponential:
          case Family::rayleigh:
            phi.emplace(key, SurvivalParams(family, {rng.gamma(hyper.rate_a, hyper.rate_b)}));
            break;
        }
        const auto w = rng.dirichlet(cardinalities[n] - 1);
        std::vector<double> row(cardinalities[n], 0.0);
        for (std::size_t i = 0, j = 0; i < row.size(); ++i)
          if (i != x) row[i] = w[j++];
        theta.emplace(key, std::move(row));
      }
  }
  return NetworkModel(graph, cardinalities, family, std::move(phi), std::move(theta));
}

inline ClockedState random_initial_state(const std::vector<std::size_t>& cardinalities, Rng& rng) {
  std::vector<LocalState> s(cardinalities.size());
  for (std::size_t n = 0; n < s.size(); ++n) s[n] = static_cast<LocalState>(rng.uniform_index(0, cardinalities[n] - 1));
  return ClockedState::at_rest(std::move(s));
}

/// A truth graph scoreable by AUROC needs both edges and non-edges.
inline bool scoreable(const Graph& g) {
  const std::size_t n = g.num_nodes();
  return !g.edges().empty() && g.edges().size() < n * (n - 1);
}

// ---------------------------------------------------------------------------
// Utilities
// ---------------------------------------------------------------------------

/// Runs task(i) for i in [0, count) on up to `threads` workers. Results are
/// written by index, so the outcome does not depend on scheduling. The first
/// exception (lowest index) is rethrown.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(threads, count); ++w)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= count) return;
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Linear-interpolation sample quantile (type 7).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Trajectory cut after its first m events, observed until event m+1.
inline Trajectory prefix(const Trajectory& t, std::size_t m) {
  if (m > t.events.size()) throw ModelError("prefix longer than the trajectory");
  Trajectory out;
  out.initial = t.initial;
  out.events.assign(t.events.begin(), t.events.begin() + static_cast<std::ptrdiff_t>(m));
  out.end_time = m < t.events.size() ? t.events[m].time : t.end_time;
  return out;
}

inline std::string role_name(Family f, std::size_t index) {
  switch (f) {
    case Family::weibull:
    case Family::gamma: return index == 0 ? "shape" : "rate";
    case Family::exponential: return "rate";
    case Family::rayleigh: return "scale";
  }
  return "param";
}

// ---------------------------------------------------------------------------
// Parameter recovery
// ---------------------------------------------------------------------------

struct MseRecord {
  std::size_t replicate = 0;
  std::size_t size = 0;
  ParamKey key;
  std::string role;
  double truth = 0.0;
  double estimate = 0.0;
};

struct MseSummaryRow {
  std::size_t size = 0;
  std::string role;
  std::size_t count = 0;
  double q10 = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double median_relative_error = 0.0;
};

struct MseResult {
  NetworkModel model;
  std::vector<MseRecord> records;
  std::vector<MseSummaryRow> summary;
  /// (replicate, size, key) combinations skipped for lack of data.
  std::size_t skipped = 0;
};

/// One fixed random model; each replicate samples max(sizes) transitions and
/// fits MAP parameters on every prefix length in `sizes`.
inline MseResult mse_experiment(const ExperimentConfig& cfg) {
  std::vector<std::size_t> cards(cfg.num_nodes, cfg.cardinality);
  Rng model_rng(cfg.seed, 0);
  const Graph graph = random_graph(cfg.num_nodes, cfg.max_indegree, model_rng);
  NetworkModel model = random_params(graph, cards, cfg.family, cfg.hyper, model_rng);
  const std::size_t max_size = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
  const BoxPrior prior = BoxPrior::uniform(cfg.family, cfg.box_lower, cfg.box_upper);

  std::vector<std::vector<MseRecord>> per_rep(cfg.replicates);
  std::vector<std::size_t> skipped(cfg.replicates, 0);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    Rng rng(cfg.seed, r + 1);
    const auto init = random_initial_state(cards, rng);
    const Trajectory full = sample_transitions(model, init, max_size, rng);
    for (std::size_t size : cfg.sizes) {
      const auto stats = sufficient_stats(prefix(full, size), graph, cards);
      for (const auto& key : model.keys()) {
        auto it = stats.find(key);
        if (it == stats.end()) {
          ++skipped[r];
          continue;
        }
        try {
          const auto est = map_estimate(it->second, cfg.family, prior);
          const auto& truth = model.phi(key);
          for (std::size_t i = 0; i < truth.size(); ++i)
            per_rep[r].push_back({r, size, key, role_name(cfg.family, i), truth[i], est[i]});
        } catch (const InsufficientData&) {
          ++skipped[r];
        }
      }
    }
  });

  MseResult out{model, {}, {}, 0};
  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    out.records.insert(out.records.end(), per_rep[r].begin(), per_rep[r].end());
    out.skipped += skipped[r];
  }
  std::vector<std::string> roles;
  for (std::size_t i = 0; i < family_arity(cfg.family); ++i) roles.push_back(role_name(cfg.family, i));
  std::vector<std::size_t> sizes = cfg.sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  for (std::size_t size : sizes)
    for (const auto& role : roles) {
      std::vector<double> sq;
      std::vector<double> rel;
      for (const auto& rec : out.records)
        if (rec.size == size && rec.role == role) {
          sq.push_back((rec.estimate - rec.truth) * (rec.estimate - rec.truth));
          rel.push_back(std::abs(rec.estimate - rec.truth) / rec.truth);
        }
      out.summary.push_back({size, role, sq.size(), quantile(sq, 0.1), quantile(sq, 0.5), quantile(sq, 0.9),
                             quantile(rel, 0.5)});
    }
  return out;
}

// ---------------------------------------------------------------------------
// Structure recovery
// ---------------------------------------------------------------------------

struct ScoreRecord {
  double shape = 0.0;  // shape sweep only
  std::size_t graph = 0;
  std::size_t trajectories = 0;
  std::string model;
  double auroc = 0.0;
  double aupr = 0.0;
};

struct StructureResult {
  std::vector<ScoreRecord> records;
};

namespace detail {

// Streams `trajectories` trajectories of one random model through the
// augmented learner and the exponential baseline, scoring at checkpoints.
inline std::vector<ScoreRecord> run_structure_unit(const ExperimentConfig& cfg, Rng& rng,
                                                   std::optional<double> fixed_shape, std::size_t graph_id) {
  std::vector<std::size_t> cards(cfg.num_nodes, cfg.cardinality);
  Graph truth;
  do {
    truth = random_graph(cfg.num_nodes, cfg.max_indegree, rng);
  } while (!scoreable(truth));
  const NetworkModel model = random_params(truth, cards, cfg.family, cfg.hyper, rng, fixed_shape);
  std::vector<Trajectory> trajs;
  for (std::size_t i = 0; i < cfg.trajectories; ++i)
    trajs.push_back(gillespie_sample(model, random_initial_state(cards, rng), cfg.horizon, rng));

  MarginalPriors priors;
  priors.box_lower = cfg.box_lower;
  priors.box_upper = cfg.box_upper;
  StructureLearner augmented(cards, cfg.family, cfg.max_indegree, priors, cfg.graph_prior);
  StructureLearner baseline(cards, Family::exponential, cfg.max_indegree, priors, cfg.graph_prior);
  const auto adjacency = truth.adjacency();
  std::vector<bool> record(cfg.trajectories + 1, cfg.checkpoints.empty());
  for (auto k : cfg.checkpoints) record[k] = true;
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < cfg.trajectories; ++i) {
    augmented.add(trajs[i]);
    baseline.add(trajs[i]);
    if (!record[i + 1]) continue;
    for (int which = 0; which < 2; ++which) {
      auto& learner = which == 0 ? augmented : baseline;
      const auto edges = edge_marginals(learner.posterior());
      out.push_back({fixed_shape.value_or(0.0), graph_id, i + 1, which == 0 ? "augmented" : "baseline",
                     auroc(edges, adjacency), aupr(edges, adjacency)});
    }
  }
  return out;
}

}  // namespace detail

inline StructureResult structure_experiment(const ExperimentConfig& cfg) {
  std::vector<std::vector<ScoreRecord>> per_graph(cfg.graphs);
  parallel_for(cfg.graphs, cfg.threads, [&](std::size_t g) {
    Rng rng(cfg.seed, g + 1);
    per_graph[g] = detail::run_structure_unit(cfg, rng, std::nullopt, g);
  });
  StructureResult out;
  for (auto& v : per_graph) out.records.insert(out.records.end(), v.begin(), v.end());
  return out;
}

/// Structure recovery with every shape pinned to each value of cfg.shapes;
/// rates stay random. Scores are taken after all trajectories.
inline StructureResult shape_sweep(ExperimentConfig cfg) {
  if (cfg.family != Family::weibull) throw ModelError("the shape sweep needs the weibull family");
  cfg.checkpoints = {cfg.trajectories};
  const std::size_t units = cfg.shapes.size() * cfg.graphs;
  std::vector<std::vector<ScoreRecord>> per_unit(units);
  parallel_for(units, cfg.threads, [&](std::size_t u) {
    const std::size_t s = u / cfg.graphs;
    const std::size_t g = u % cfg.graphs;
    Rng rng(cfg.seed, u + 1);
    per_unit[u] = detail::run_structure_unit(cfg, rng, cfg.shapes[s], g);
  });
  StructureResult out;
  for (auto& v : per_unit) out.records.insert(out.records.end(), v.begin(), v.end());
  return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write '" + path + "'");
  f << text;
}

inline std::string mse_records_csv(const MseResult& r) {
  std::string s = "replicate,size,node,state,parent_state,role,truth,estimate,squared_error\n";
  for (const auto& rec : r.records)
    s += std::to_string(rec.replicate) + "," + std::to_string(rec.size) + "," + std::to_string(rec.key.node) + "," +
         std::to_string(rec.key.state) + "," + std::to_string(rec.key.parent_state) + "," + rec.role + "," +
         fmt(rec.truth) + "," + fmt(rec.estimate) + "," + fmt((rec.estimate - rec.truth) * (rec.estimate - rec.truth)) +
         "\n";
  return s;
}

inline std::string mse_summary_csv(const MseResult& r) {
  std::string s = "size,role,count,sq_err_q10,sq_err_q50,sq_err_q90,median_relative_error\n";
  for (const auto& row : r.summary)
    s += std::to_string(row.size) + "," + row.role + "," + std::to_string(row.count) + "," + fmt(row.q10) + "," +
         fmt(row.q50) + "," + fmt(row.q90) + "," + fmt(row.median_relative_error) + "\n";
  return s;
}

struct ScoreSummaryRow {
  double shape = 0.0;
  std::size_t trajectories = 0;
  std::string model;
  std::size_t count = 0;
  double auroc_lo = 0.0;
  double auroc_median = 0.0;
  double auroc_hi = 0.0;
  double aupr_lo = 0.0;
  double aupr_median = 0.0;
  double aupr_hi = 0.0;
};

/// Quantiles per (shape, trajectory count, model) at levels lo / 0.5 / hi.
inline std::vector<ScoreSummaryRow> summarize_scores(const StructureResult& r, double lo, double hi) {
  std::vector<ScoreSummaryRow> rows;
  std::vector<std::tuple<double, std::size_t, std::string>> groups;
  for (const auto& rec : r.records) groups.emplace_back(rec.shape, rec.trajectories, rec.model);
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  for (const auto& [shape, count, model] : groups) {
    std::vector<double> a;
    std::vector<double> p;
    for (const auto& rec : r.records)
      if (rec.shape == shape && rec.trajectories == count && rec.model == model) {
        a.push_back(rec.auroc);
        p.push_back(rec.aupr);
      }
    rows.push_back({shape, count, model, a.size(), quantile(a, lo), quantile(a, 0.5), quantile(a, hi), quantile(p, lo),
                    quantile(p, 0.5), quantile(p, hi)});
  }
  return rows;
}

inline std::string score_records_csv(const StructureResult& r, bool with_shape) {
  std::string s = with_shape ? "shape,graph,trajectories,model,auroc,aupr\n" : "graph,trajectories,model,auroc,aupr\n";
  for (const auto& rec : r.records) {
    if (with_shape) s += fmt(rec.shape) + ",";
    s += std::to_string(rec.graph) + "," + std::to_string(rec.trajectories) + "," + rec.model + "," + fmt(rec.auroc) +
         "," + fmt(rec.aupr) + "\n";
  }
  return s;
}

inline std::string score_summary_csv(const std::vector<ScoreSummaryRow>& rows, bool with_shape, double lo,
                                     double hi) {
  const std::string l = fmt(lo);
  const std::string h = fmt(hi);
  std::string s = with_shape ? "shape," : "";
  s += "trajectories,model,count,auroc_q" + l + ",auroc_q0.5,auroc_q" + h + ",aupr_q" + l + ",aupr_q0.5,aupr_q" + h +
       "\n";
  for (const auto& row : rows) {
    if (with_shape) s += fmt(row.shape) + ",";
    s += std::to_string(row.trajectories) + "," + row.model + "," + std::to_string(row.count) + "," +
         fmt(row.auroc_lo) + "," + fmt(row.auroc_median) + "," + fmt(row.auroc_hi) + "," + fmt(row.aupr_lo) + "," +
         fmt(row.aupr_median) + "," + fmt(row.aupr_hi) + "\n";
  }
  return s;
}

inline json summary_rows_json(const std::vector<ScoreSummaryRow>& rows, bool with_shape) {
  json arr = json::array();
  for (const auto& row : rows) {
    json j = {{"trajectories", row.trajectories},
              {"model", row.model},
              {"count", row.count},
              {"auroc", {row.auroc_lo, row.auroc_median, row.auroc_hi}},
              {"aupr", {row.aupr_lo, row.aupr_median, row.aupr_hi}}};
    if (with_shape) j["shape"] = row.shape;
    arr.push_back(std::move(j));
  }
  return arr;
}

/// Runs one experiment and writes its CSV tables and summary.json into `dir`
/// (which must exist). Returns the summary.
inline json run_and_write(Kind kind, const ExperimentConfig& cfg, const std::string& dir) {
  json summary;
  summary["config"] = config_to_json(cfg);
  const std::string base = dir.empty() || dir.back() == '/' ? dir : dir + "/";
  switch (kind) {
    case Kind::mse: {
      const auto r = mse_experiment(cfg);
      write_text(base + "mse_errors.csv", mse_records_csv(r));
      write_text(base + "mse_summary.csv", mse_summary_csv(r));
      summary["experiment"] = "mse";
      summary["skipped"] = r.skipped;
      json rows = json::array();
      for (const auto& row : r.summary)
        rows.push_back({{"size", row.size},
                        {"role", row.role},
                        {"count", row.count},
                        {"squared_error", {row.q10, row.q50, row.q90}},
                        {"median_relative_error", row.median_relative_error}});
      summary["summary"] = rows;
      break;
    }
    case Kind::structure: {
      const auto r = structure_experiment(cfg);
      const auto rows = summarize_scores(r, 0.1, 0.9);
      write_text(base + "structure_scores.csv", score_records_csv(r, false));
      write_text(base + "structure_summary.csv", score_summary_csv(rows, false, 0.1, 0.9));
      summary["experiment"] = "structure";
      summary["summary"] = summary_rows_json(rows, false);
      break;
    }
    case Kind::shape_sweep: {
      const auto r = shape_sweep(cfg);
      const auto rows = summarize_scores(r, 0.2, 0.8);
      write_text(base + "shape_scores.csv", score_records_csv(r, true));
      write_text(base + "shape_summary.csv", score_summary_csv(rows, true, 0.2, 0.8));
      summary["experiment"] = "shape-sweep";
      summary["summary"] = summary_rows_json(rows, true);
      break;
    }
  }
  write_text(base + "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace clockctbn::experiments

#endif  // CLOCKCTBN_EXPERIMENTS_HPP
