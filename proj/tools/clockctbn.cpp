// Command-line front end: sampling, likelihoods, fitting, scoring, ingestion
// and the experiment harness.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "clockctbn/experiments.hpp"
#include "clockctbn/gnw.hpp"
#include "clockctbn/infer_params.hpp"
#include "clockctbn/infer_structure.hpp"
#include "clockctbn/io.hpp"
#include "clockctbn/likelihood.hpp"
#include "clockctbn/random.hpp"
#include "clockctbn/simulator.hpp"

namespace fs = std::filesystem;
using namespace clockctbn;
using nlohmann::json;

namespace {

constexpr int exit_usage = 1;
constexpr int exit_data = 2;

/// Thrown for argument combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("clockctbn");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CLOCKCTBN_LOG")) {
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "warn") spdlog::set_level(spdlog::level::warn);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring unknown CLOCKCTBN_LOG level '{}'", v);
  }
}

/// Writes to `path`, or standard output when path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write '" + path + "'");
  f << text;
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<Trajectory> out;
    for (const auto& f : files) {
      auto part = io::read_trajectory_file(f.string());
      out.insert(out.end(), part.begin(), part.end());
    }
    spdlog::info("read {} trajectories from {} files in {}", out.size(), files.size(), path);
    return out;
  }
  auto out = io::read_trajectory_file(path);
  spdlog::info("read {} trajectories from {}", out.size(), path);
  return out;
}

void check_against(const std::vector<Trajectory>& trajs, const std::vector<std::size_t>& cards) {
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    try {
      validate_trajectory(trajs[i], cards);
    } catch (const InvalidTrajectory& e) {
      throw InvalidTrajectory("trajectory " + std::to_string(i) + " does not fit the model: " + e.what());
    }
  }
}

/// max(2, largest observed state + 1) per node.
std::vector<std::size_t> infer_cardinalities(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw InsufficientData("no trajectories");
  std::vector<std::size_t> cards(trajs.front().initial.size(), 2);
  for (const auto& t : trajs) {
    if (t.initial.size() != cards.size()) throw InvalidTrajectory("trajectories disagree on the number of nodes");
    for (std::size_t n = 0; n < cards.size(); ++n)
      cards[n] = std::max(cards[n], static_cast<std::size_t>(t.initial.states[n]) + 1);
    for (const auto& e : t.events) cards[e.node] = std::max(cards[e.node], static_cast<std::size_t>(e.state) + 1);
  }
  return cards;
}

json params_json(const SurvivalParams& p) { return p.values(); }

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string model;
  double end_time = 0.0;
  std::optional<std::uint64_t> seed;
  std::size_t count = 1;
  std::string init;
  std::string out;
};

int run_sample(const SampleArgs& a) {
  const auto mf = io::read_model_file(a.model);
  if (!mf.model) throw ModelError("'" + a.model + "' has no parameters to sample from");
  const NetworkModel& model = *mf.model;
  std::vector<LocalState> init(model.num_nodes(), 0);
  if (!a.init.empty()) {
    init.clear();
    std::stringstream ss(a.init);
    std::string tok;
    while (std::getline(ss, tok, ',')) init.push_back(std::stoi(tok));
    if (init.size() != model.num_nodes()) throw UsageError("--init needs one state per node");
  }
  Rng rng(*a.seed);
  std::ostringstream out;
  for (std::size_t i = 0; i < a.count; ++i)
    io::write_trajectory(out, gillespie_sample(model, ClockedState::at_rest(init), a.end_time, rng));
  emit(a.out, out.str());
  return 0;
}

int run_loglik(const std::string& model_path, const std::string& traj_path, const std::string& out_path) {
  const auto mf = io::read_model_file(model_path);
  if (!mf.model) throw ModelError("'" + model_path + "' has no parameters");
  const auto trajs = load_trajectories(traj_path);
  check_against(trajs, mf.cardinalities);
  json j;
  j["trajectories"] = json::array();
  double total = 0.0;
  std::vector<double> per_node(mf.model->num_nodes(), 0.0);
  for (const auto& t : trajs) {
    const auto ll = trajectory_log_likelihood(*mf.model, t);
    json tj = {{"total", ll.total}, {"per_node", ll.per_node}};
    if (!ll.diagnostic.empty()) {
      tj["diagnostic"] = ll.diagnostic;
      spdlog::warn("{}", ll.diagnostic);
    }
    j["trajectories"].push_back(tj);
    total += ll.total;
    for (std::size_t n = 0; n < per_node.size(); ++n) per_node[n] += ll.per_node[n];
  }
  j["total"] = total;
  j["per_node"] = per_node;
  emit(out_path, j.dump(2) + "\n");
  return 0;
}

int run_stats(const std::string& model_path, const std::string& traj_path, const std::string& out_path) {
  const auto mf = io::read_model_file(model_path);
  const auto trajs = load_trajectories(traj_path);
  check_against(trajs, mf.cardinalities);
  SuffStats pooled;
  for (const auto& t : trajs) merge_stats(pooled, sufficient_stats(t, mf.graph, mf.cardinalities));
  emit(out_path, io::stats_to_json(pooled).dump(2) + "\n");
  return 0;
}

struct FitParamsArgs {
  std::string structure;
  std::string traj;
  std::string family;
  bool grid = false;
  std::size_t grid_points = 50;
  double box_lower = 0.1;
  double box_upper = 100.0;
  std::string out;
};

int run_fit_params(const FitParamsArgs& a) {
  const auto mf = io::read_model_file(a.structure);
  std::optional<Family> family = mf.family;
  if (!a.family.empty()) family = parse_family(a.family);
  if (!family) throw UsageError("no family given and the structure file names none");
  const auto trajs = load_trajectories(a.traj);
  check_against(trajs, mf.cardinalities);
  const BoxPrior prior = BoxPrior::uniform(*family, a.box_lower, a.box_upper);
  const ParamFit fit = fit_params(trajs, mf.graph, mf.cardinalities, *family, prior);
  for (const auto& key : fit.skipped) spdlog::warn("key {}: not enough data, no survival estimate", key.str());

  SuffStats pooled;
  if (a.grid)
    for (const auto& t : trajs) merge_stats(pooled, sufficient_stats(t, mf.graph, mf.cardinalities));

  json j;
  j["family"] = std::string(family_name(*family));
  j["box"] = {a.box_lower, a.box_upper};
  j["keys"] = json::object();
  for (const auto& [key, est] : fit.keys) {
    json k;
    k["phi"] = est.phi ? params_json(*est.phi) : json(nullptr);
    k["theta"] = est.theta;
    k["counts"] = {{"full", est.num_full}, {"censored", est.num_censored}, {"truncated", est.num_truncated}};
    if (a.grid && pooled.count(key)) {
      const std::size_t dim = family_arity(*family);
      std::vector<double> axis(a.grid_points);
      for (std::size_t i = 0; i < a.grid_points; ++i) {
        const double f = a.grid_points == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(a.grid_points - 1);
        axis[i] = std::exp(std::log(a.box_lower) + f * (std::log(a.box_upper) - std::log(a.box_lower)));
      }
      std::vector<std::vector<double>> points;
      if (dim == 1) {
        for (double v : axis) points.push_back({v});
      } else {
        for (double v0 : axis)
          for (double v1 : axis) points.push_back({v0, v1});
      }
      const auto w = grid_posterior(pooled.at(key), *family, points, prior);
      k["grid"] = {{"axis", axis}, {"weights", w}};
    }
    j["keys"][key.str()] = k;
  }
  emit(a.out, j.dump(2) + "\n");
  return 0;
}

struct FitStructureArgs {
  std::string trajs;
  std::string family;
  std::size_t max_indegree = 3;
  std::optional<double> edge_penalty;
  std::string model;
  std::string mode = "pooled";
  std::string out;
};

json posterior_json(const ParentSetPosterior& post, Family family, std::size_t max_indegree) {
  json j;
  j["family"] = std::string(family_name(family));
  j["max_indegree"] = max_indegree;
  j["nodes"] = json::array();
  for (NodeId n = 0; n < post.nodes.size(); ++n) {
    const auto& node = post.nodes[n];
    json sets = json::array();
    for (std::size_t i = 0; i < node.sets.size(); ++i)
      sets.push_back({{"parents", node.sets[i]},
                      {"log_marginal", node.log_marginal[i]},
                      {"log_weight", node.log_weight[i]},
                      {"weight", std::exp(node.log_weight[i])}});
    j["nodes"].push_back({{"node", n}, {"parent_sets", sets}});
  }
  j["edge_marginals"] = edge_marginals(post);
  return j;
}

int run_fit_structure(const FitStructureArgs& a) {
  const auto trajs = load_trajectories(a.trajs);
  std::vector<std::size_t> cards;
  std::optional<Family> family;
  if (!a.model.empty()) {
    const auto mf = io::read_model_file(a.model);
    cards = mf.cardinalities;
    family = mf.family;
    check_against(trajs, cards);
  } else {
    cards = infer_cardinalities(trajs);
  }
  if (!a.family.empty()) family = parse_family(a.family);
  if (!family) throw UsageError("--family is required when no model file names one");
  if (a.mode != "pooled" && a.mode != "per-trajectory") throw UsageError("--mode must be pooled or per-trajectory");
  GraphPrior gp;
  if (a.edge_penalty) {
    gp.kind = GraphPrior::Kind::edge_penalty;
    gp.rho = *a.edge_penalty;
  }
  StructureLearner learner(cards, *family, a.max_indegree, {}, gp,
                           a.mode == "pooled" ? StructureLearner::Mode::pooled
                                              : StructureLearner::Mode::per_trajectory);
  for (const auto& t : trajs) learner.add(t);
  emit(a.out, posterior_json(learner.posterior(), *family, a.max_indegree).dump(2) + "\n");
  return 0;
}

int run_score(const std::string& scores_path, const std::string& truth_path, const std::string& out_path) {
  const json sj = io::read_json_file(scores_path);
  const auto scores = io::matrix_from_json(sj.is_object() ? sj.at("edge_marginals") : sj);
  const json tj = io::read_json_file(truth_path);
  std::vector<std::vector<double>> truth;
  if (tj.is_object()) {
    const auto mf = io::model_from_json(tj);
    truth = mf.graph.adjacency();
  } else {
    truth = io::matrix_from_json(tj);
  }
  json j = {{"auroc", auroc(scores, truth)}, {"aupr", aupr(scores, truth)}};
  emit(out_path, j.dump(2) + "\n");
  return 0;
}

int run_ingest(const std::string& in, double threshold, std::size_t min_transitions, const std::string& out_path) {
  const auto series = gnw::load_timeseries(in);
  std::vector<Trajectory> trajs;
  for (const auto& ts : series) trajs.push_back(gnw::discretize(ts, threshold));
  const std::size_t before = trajs.size();
  trajs = gnw::filter_min_transitions(std::move(trajs), min_transitions);
  spdlog::info("kept {} of {} series with at least {} transitions", trajs.size(), before, min_transitions);
  std::ostringstream out;
  io::write_trajectories(out, trajs);
  emit(out_path, out.str());
  return 0;
}

experiments::Kind parse_kind(const std::string& name) {
  if (name == "mse") return experiments::Kind::mse;
  if (name == "structure") return experiments::Kind::structure;
  if (name == "shape-sweep") return experiments::Kind::shape_sweep;
  throw UsageError("unknown experiment '" + name + "' (expected mse, structure or shape-sweep)");
}

struct ExperimentArgs {
  std::string kind;
  std::string config;
  std::string out;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
};

int run_experiment(const ExperimentArgs& a) {
  const auto kind = parse_kind(a.kind);
  json cj = a.config.empty() ? json::object() : io::read_json_file(a.config);
  if (a.seed) cj["seed"] = *a.seed;
  if (!cj.is_object() || !cj.contains("seed"))
    throw UsageError("experiments need an explicit seed (config key 'seed' or --seed)");
  auto cfg = experiments::config_from_json(cj, kind, a.paper_scale);
  if (a.threads) cfg.threads = std::max<std::size_t>(1, *a.threads);
  fs::create_directories(a.out);
  spdlog::info("running {} into {}", a.kind, a.out);
  experiments::run_and_write(kind, cfg, a.out);
  return 0;
}

struct ValidateArgs {
  std::string model;
  std::string traj;
  std::string config;
  std::string experiment = "structure";
  std::string tsv;
};

int run_validate(const ValidateArgs& a) {
  if (a.model.empty() && a.traj.empty() && a.config.empty() && a.tsv.empty())
    throw UsageError("validate needs at least one of --model, --traj, --config, --tsv");
  std::optional<io::ModelFile> mf;
  if (!a.model.empty()) {
    mf = io::read_model_file(a.model);
    std::cerr << a.model << ": ok (" << mf->cardinalities.size() << " nodes, " << mf->graph.edges().size()
              << " edges" << (mf->model ? ", parameters present" : "") << ")\n";
  }
  if (!a.traj.empty()) {
    const auto trajs = load_trajectories(a.traj);
    if (mf) check_against(trajs, mf->cardinalities);
    std::cerr << a.traj << ": ok (" << trajs.size() << " trajectories)\n";
  }
  if (!a.config.empty()) {
    experiments::config_from_json(io::read_json_file(a.config), parse_kind(a.experiment));
    std::cerr << a.config << ": ok\n";
  }
  if (!a.tsv.empty()) {
    const auto series = gnw::load_timeseries(a.tsv);
    std::cerr << a.tsv << ": ok (" << series.size() << " series)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Clock-augmented continuous-time Bayesian networks"};
  app.require_subcommand(1);

  SampleArgs sample;
  auto* sc = app.add_subcommand("sample", "Simulate trajectories from a parametrized model");
  sc->add_option("--model", sample.model, "Model JSON")->required();
  sc->add_option("--end-time", sample.end_time, "Observation horizon")->required()->check(CLI::PositiveNumber);
  sc->add_option("--seed", sample.seed, "Random seed")->required();
  sc->add_option("--count", sample.count, "Number of trajectories")->check(CLI::PositiveNumber);
  sc->add_option("--init", sample.init, "Comma-separated initial states (default all zero)");
  sc->add_option("--out", sample.out, "Output JSONL (default stdout)");

  std::string model_path;
  std::string traj_path;
  std::string out_path;
  auto* ll = app.add_subcommand("loglik", "Exact log-likelihood of trajectories");
  ll->add_option("--model", model_path, "Model JSON")->required();
  ll->add_option("--traj", traj_path, "Trajectory JSONL or directory")->required();
  ll->add_option("--out", out_path, "Output JSON (default stdout)");

  auto* st = app.add_subcommand("stats", "Dump sufficient statistics");
  st->add_option("--model", model_path, "Model or structure JSON")->required();
  st->add_option("--traj", traj_path, "Trajectory JSONL or directory")->required();
  st->add_option("--out", out_path, "Output JSON (default stdout)");

  FitParamsArgs fp;
  auto* fpc = app.add_subcommand("fit-params", "MAP survival parameters and transition posteriors");
  fpc->add_option("--model-structure", fp.structure, "Structure JSON (parameters ignored)")->required();
  fpc->add_option("--traj", fp.traj, "Trajectory JSONL or directory")->required();
  fpc->add_option("--family", fp.family, "Survival family (default: from the structure file)");
  fpc->add_flag("--grid", fp.grid, "Also emit grid posteriors");
  fpc->add_option("--grid-points", fp.grid_points, "Grid points per axis")->check(CLI::PositiveNumber);
  fpc->add_option("--box-lower", fp.box_lower, "Lower prior bound")->check(CLI::PositiveNumber);
  fpc->add_option("--box-upper", fp.box_upper, "Upper prior bound")->check(CLI::PositiveNumber);
  fpc->add_option("--out", fp.out, "Output JSON (default stdout)");

  FitStructureArgs fs_args;
  auto* fsc = app.add_subcommand("fit-structure", "Posterior over parent sets and edge marginals");
  fsc->add_option("--trajs", fs_args.trajs, "Trajectory JSONL file or directory of .jsonl files")->required();
  fsc->add_option("--family", fs_args.family, "Survival family");
  fsc->add_option("--max-indegree", fs_args.max_indegree, "Largest candidate parent set");
  fsc->add_option("--edge-penalty", fs_args.edge_penalty, "Per-edge log prior penalty rho");
  fsc->add_option("--model", fs_args.model, "Model or structure JSON supplying cardinalities");
  fsc->add_option("--mode", fs_args.mode, "pooled (default) or per-trajectory evidence");
  fsc->add_option("--out", fs_args.out, "Output JSON (default stdout)");

  std::string scores_path;
  std::string truth_path;
  auto* scc = app.add_subcommand("score", "AUROC and AUPR of edge scores against a true graph");
  scc->add_option("--scores", scores_path, "fit-structure output or a square matrix")->required();
  scc->add_option("--truth", truth_path, "Model JSON or a square 0/1 matrix")->required();
  scc->add_option("--out", out_path, "Output JSON (default stdout)");

  std::string tsv_in;
  double threshold = 0.5;
  std::size_t min_transitions = 8;
  auto* ig = app.add_subcommand("ingest-gnw", "Binarize GNW-style time series into trajectories");
  ig->add_option("--in", tsv_in, "Tab-separated time series")->required();
  ig->add_option("--threshold", threshold, "Activation threshold");
  ig->add_option("--min-transitions", min_transitions, "Drop series with fewer events");
  ig->add_option("--out", out_path, "Output JSONL (default stdout)");

  ExperimentArgs ex;
  auto* exc = app.add_subcommand("experiment", "Run a synthetic study");
  exc->add_option("kind", ex.kind, "mse, structure or shape-sweep")->required();
  exc->add_option("--config", ex.config, "Config JSON");
  exc->add_option("--out", ex.out, "Output directory")->required();
  exc->add_option("--threads", ex.threads, "Worker threads");
  exc->add_option("--seed", ex.seed, "Seed (overrides the config)");
  exc->add_flag("--paper-scale", ex.paper_scale, "Use the full-size protocol defaults");

  ValidateArgs va;
  auto* vac = app.add_subcommand("validate", "Check input files");
  vac->add_option("--model", va.model, "Model JSON");
  vac->add_option("--traj", va.traj, "Trajectory JSONL or directory");
  vac->add_option("--config", va.config, "Experiment config JSON");
  vac->add_option("--experiment", va.experiment, "Experiment kind the config is for");
  vac->add_option("--tsv", va.tsv, "GNW-style time series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*sc) return run_sample(sample);
    if (*ll) return run_loglik(model_path, traj_path, out_path);
    if (*st) return run_stats(model_path, traj_path, out_path);
    if (*fpc) return run_fit_params(fp);
    if (*fsc) return run_fit_structure(fs_args);
    if (*scc) return run_score(scores_path, truth_path, out_path);
    if (*ig) return run_ingest(tsv_in, threshold, min_transitions, out_path);
    if (*exc) return run_experiment(ex);
    if (*vac) return run_validate(va);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    std::cerr << app.help();
    return exit_usage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return exit_data;
  }
  return exit_usage;
}
