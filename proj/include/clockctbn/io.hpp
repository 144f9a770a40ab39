#ifndef CLOCKCTBN_IO_HPP
#define CLOCKCTBN_IO_HPP

#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clockctbn/errors.hpp"
#include "clockctbn/likelihood.hpp"
#include "clockctbn/model.hpp"

namespace clockctbn::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

/// Contents of a model file. phi/theta are optional, so the same format also
/// describes a bare structure for fitting.
struct ModelFile {
  Graph graph;
  std::vector<std::size_t> cardinalities;
  std::optional<Family> family;
  std::optional<NetworkModel> model;
};

inline json graph_to_json(const Graph& g, std::span<const std::size_t> cardinalities) {
  json j;
  j["nodes"] = json::array();
  for (auto c : cardinalities) j["nodes"].push_back({{"cardinality", c}});
  j["edges"] = json::array();
  for (const auto& [s, d] : g.edges()) j["edges"].push_back({s, d});
  return j;
}

inline json model_to_json(const NetworkModel& m) {
  json j = graph_to_json(m.graph(), m.cardinalities());
  j["family"] = std::string(family_name(m.family()));
  j["phi"] = json::object();
  j["theta"] = json::object();
  for (const auto& key : m.keys()) {
    j["phi"][key.str()] = m.phi(key).values();
    j["theta"][key.str()] = m.theta(key);
  }
  return j;
}

inline ModelFile model_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ModelError("model file must be a JSON object");
    if (!j.contains("nodes") || !j.at("nodes").is_array()) throw ModelError("model file needs a 'nodes' array");
    ModelFile out;
    for (const auto& node : j.at("nodes")) {
      const auto c = node.at("cardinality").get<long long>();
      if (c < 2) throw ModelError("every node needs cardinality >= 2");
      out.cardinalities.push_back(static_cast<std::size_t>(c));
    }
    std::set<std::pair<NodeId, NodeId>> edges;
    if (j.contains("edges"))
      for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw ModelError("edges must be [source, target] pairs");
        const auto s = e.at(0).get<long long>();
        const auto d = e.at(1).get<long long>();
        if (s < 0 || d < 0) throw ModelError("edge endpoints must be nonnegative");
        edges.emplace(static_cast<NodeId>(s), static_cast<NodeId>(d));
      }
    out.graph = Graph(out.cardinalities.size(), std::move(edges));
    if (j.contains("family")) out.family = parse_family(j.at("family").get<std::string>());
    const bool has_phi = j.contains("phi");
    const bool has_theta = j.contains("theta");
    if (has_phi != has_theta) throw ModelError("model file must give both phi and theta, or neither");
    if (has_phi) {
      if (!out.family) throw ModelError("model file with parameters needs a 'family'");
      std::map<ParamKey, SurvivalParams> phi;
      std::map<ParamKey, std::vector<double>> theta;
      for (const auto& [k, v] : j.at("phi").items()) {
        const auto values = v.get<std::vector<double>>();
        phi.emplace(ParamKey::parse(k), SurvivalParams(*out.family, values));
      }
      for (const auto& [k, v] : j.at("theta").items()) theta.emplace(ParamKey::parse(k), v.get<std::vector<double>>());
      out.model.emplace(out.graph, out.cardinalities, *out.family, std::move(phi), std::move(theta));
    }
    return out;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline ModelFile read_model_file(const std::string& path) { return model_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Trajectory files (JSON Lines)
// ---------------------------------------------------------------------------

/// One header record per trajectory followed by its events. Clocks are
/// written only when some initial clock is nonzero.
inline void write_trajectory(std::ostream& out, const Trajectory& t) {
  json head;
  head["init"] = t.initial.states;
  bool any_clock = false;
  for (double c : t.initial.clocks) any_clock = any_clock || c != 0.0;
  if (any_clock) head["clocks"] = t.initial.clocks;
  head["end_time"] = t.end_time;
  out << head.dump() << '\n';
  for (const auto& e : t.events) {
    json rec;
    rec["t"] = e.time;
    rec["node"] = e.node;
    rec["state"] = e.state;
    out << rec.dump() << '\n';
  }
}

inline void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs) {
  for (const auto& t : trajs) write_trajectory(out, t);
}

inline std::vector<Trajectory> read_trajectories(std::istream& in, const std::string& source = "<input>") {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where() + e.what());
    }
    try {
      if (rec.contains("init")) {
        Trajectory t;
        const auto states = rec.at("init").get<std::vector<LocalState>>();
        std::vector<double> clocks(states.size(), 0.0);
        if (rec.contains("clocks")) clocks = rec.at("clocks").get<std::vector<double>>();
        t.initial = ClockedState(states, clocks);
        t.end_time = rec.at("end_time").get<double>();
        out.push_back(std::move(t));
      } else {
        if (out.empty()) throw ParseError(where() + "event before any trajectory header");
        Event e;
        e.time = rec.at("t").get<double>();
        const auto node = rec.at("node").get<long long>();
        if (node < 0) throw ParseError(where() + "negative node index");
        e.node = static_cast<NodeId>(node);
        e.state = rec.at("state").get<LocalState>();
        out.back().events.push_back(e);
      }
    } catch (const json::exception& e) {
      throw ParseError(where() + e.what());
    } catch (const ModelError& e) {
      throw ParseError(where() + e.what());
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    try {
      validate_trajectory(out[i]);
    } catch (const InvalidTrajectory& e) {
      throw InvalidTrajectory(source + ": trajectory " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<Trajectory> read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_trajectories(in, path);
}

// ---------------------------------------------------------------------------
// Statistics and matrices
// ---------------------------------------------------------------------------

inline json stats_to_json(const SuffStats& stats) {
  json j = json::object();
  for (const auto& [key, st] : stats) {
    j[key.str()] = {{"full", st.full},
                    {"censored", st.censored},
                    {"truncated", st.truncated},
                    {"target_counts", st.target_counts}};
  }
  return j;
}

inline std::vector<std::vector<double>> matrix_from_json(const json& j) {
  try {
    auto m = j.get<std::vector<std::vector<double>>>();
    for (const auto& row : m)
      if (row.size() != m.size()) throw ModelError("matrix must be square");
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed matrix: ") + e.what());
  }
}

}  // namespace clockctbn::io

#endif  // CLOCKCTBN_IO_HPP
