#include <gtest/gtest.h>

#include <filesystem>

#include "clockctbn/experiments.hpp"
#include "support.hpp"

using namespace clockctbn;
using namespace clockctbn::experiments;

TEST(RandomGraph, RespectsInDegreeCap) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto g = random_graph(5, 2, rng);
    for (NodeId n = 0; n < 5; ++n) {
      EXPECT_LE(g.parents(n).size(), 2u);
      EXPECT_EQ(std::count(g.parents(n).begin(), g.parents(n).end(), n), 0);
    }
  }
}

TEST(RandomGraph, InDegreeIsUniform) {
  Rng rng(2);
  std::vector<double> counts(4, 0.0);
  const int runs = 4000;
  for (int i = 0; i < runs; ++i) {
    const auto g = random_graph(4, 3, rng);
    counts[g.parents(0).size()] += 1.0;
  }
  EXPECT_GT(testing_support::chi_square_pvalue(counts, {0.25, 0.25, 0.25, 0.25}), 1e-3);
}

TEST(RandomGraph, ParentChoiceIsSymmetric) {
  Rng rng(3);
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < 6000; ++i) {
    const auto g = random_graph(4, 1, rng);
    if (g.parents(3).size() == 1) counts[g.parents(3)[0]] += 1.0;
  }
  EXPECT_GT(testing_support::chi_square_pvalue(counts, {1.0 / 3, 1.0 / 3, 1.0 / 3}), 1e-3);
}

TEST(RandomGraph, Deterministic) {
  Rng a(7), b(7);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(random_graph(6, 3, a), random_graph(6, 3, b));
  EXPECT_THROW(random_graph(1, 1, a), ModelError);
}

TEST(RandomParams, HyperpriorMeans) {
  const Graph g(3, {{0, 1}, {0, 2}, {1, 2}});
  const std::vector<std::size_t> cards{2, 3, 2};
  Rng rng(4);
  const HyperPrior h = HyperPrior::for_family(Family::weibull);
  double shape_sum = 0.0, rate_sum = 0.0, count = 0.0;
  for (int i = 0; i < 300; ++i) {
    const auto m = random_params(g, cards, Family::weibull, h, rng);
    for (const auto& key : m.keys()) {
      shape_sum += m.phi(key)[0];
      rate_sum += m.phi(key)[1];
      count += 1.0;
      const auto& row = m.theta(key);
      EXPECT_EQ(row[key.state], 0.0);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
    }
  }
  // Standard error of each mean is under 1% of the mean at this count.
  EXPECT_NEAR(shape_sum / count, h.shape_a / h.shape_b, 0.03 * h.shape_a / h.shape_b);
  EXPECT_NEAR(rate_sum / count, h.rate_a / h.rate_b, 0.03 * h.rate_a / h.rate_b);
}

TEST(RandomParams, FixedShapeAndKeyCoverage) {
  const Graph g(2, {{1, 0}});
  const std::vector<std::size_t> cards{3, 2};
  Rng rng(5);
  const auto m = random_params(g, cards, Family::weibull, {}, rng, 2.5);
  EXPECT_EQ(m.keys().size(), 3u * 2u + 2u);
  for (const auto& key : m.keys()) EXPECT_EQ(m.phi(key)[0], 2.5);
  const auto e = random_params(g, cards, Family::exponential, {}, rng);
  for (const auto& key : e.keys()) EXPECT_EQ(e.phi(key).size(), 1u);
}

TEST(Config, DefaultsAndOverrides) {
  const auto c = config_from_json(json::object(), Kind::mse);
  EXPECT_EQ(c.num_nodes, 4u);
  EXPECT_EQ(c.family, Family::weibull);
  const auto p = config_from_json(json::object(), Kind::mse, true);
  EXPECT_EQ(p.replicates, 1000u);
  const auto s = config_from_json(json::parse(R"({"family": "gamma", "seed": 9, "box": [0.5, 50]})"), Kind::structure);
  EXPECT_EQ(s.family, Family::gamma);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.box_lower, 0.5);
  EXPECT_EQ(s.hyper.shape_a, HyperPrior::for_family(Family::gamma).shape_a);
}

TEST(Config, Errors) {
  EXPECT_THROW(config_from_json(json::parse(R"({"nodes": 3})"), Kind::mse), ModelError);
  EXPECT_THROW(config_from_json(json::parse(R"({"num_nodes": "x"})"), Kind::mse), ModelError);
  EXPECT_THROW(config_from_json(json::parse(R"({"num_nodes": 1})"), Kind::mse), ModelError);
  EXPECT_THROW(config_from_json(json::parse(R"({"checkpoints": [0]})"), Kind::structure), ModelError);
  EXPECT_THROW(config_from_json(json::parse(R"({"trajectories": 10, "checkpoints": [11]})"), Kind::structure),
               ModelError);
  EXPECT_THROW(config_from_json(json::parse(R"({"family": "gamma"})"), Kind::shape_sweep), ModelError);
  EXPECT_THROW(config_from_json(json::parse("[1]"), Kind::mse), ModelError);
}

TEST(Config, RoundTrip) {
  const auto c = config_from_json(json::parse(R"({"sizes": [5, 50], "edge_penalty": 0.5, "threads": 3})"), Kind::mse);
  const auto d = config_from_json(config_to_json(c), Kind::mse);
  EXPECT_EQ(config_to_json(c), config_to_json(d));
}

TEST(Utilities, Quantile) {
  EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0, 4.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0, 4.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0, 4.0}, 1.0), 4.0);
  EXPECT_NEAR(quantile({0.0, 10.0}, 0.1), 1.0, 1e-15);
  EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
}

TEST(Utilities, PrefixEndsAtNextEvent) {
  Trajectory t;
  t.initial = ClockedState::at_rest({0});
  t.events = {{1.0, 0, 1}, {2.5, 0, 0}, {4.0, 0, 1}};
  t.end_time = 6.0;
  const auto p = prefix(t, 2);
  EXPECT_EQ(p.events.size(), 2u);
  EXPECT_EQ(p.end_time, 4.0);
  EXPECT_EQ(prefix(t, 3).end_time, 6.0);
  EXPECT_EQ(prefix(t, 0).end_time, 1.0);
  EXPECT_THROW(prefix(t, 4), ModelError);
}

TEST(Utilities, ParallelForIsDeterministicAndRethrows) {
  std::vector<int> out(50);
  parallel_for(50, 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw ModelError("boom");
                            }),
               ModelError);
}

TEST(Experiments, MseSmallRunIsReproducible) {
  const auto cfg = config_from_json(json::parse(R"({"replicates": 3, "sizes": [50, 500], "seed": 4})"), Kind::mse);
  const auto a = mse_experiment(cfg);
  auto threaded = cfg;
  threaded.threads = 3;
  const auto b = mse_experiment(threaded);
  EXPECT_EQ(mse_records_csv(a), mse_records_csv(b));
  EXPECT_EQ(mse_summary_csv(a), mse_summary_csv(b));
  ASSERT_EQ(a.summary.size(), 4u);  // two sizes x {shape, rate}
  // More data gives smaller median squared errors for both roles.
  EXPECT_LT(a.summary[2].q50, a.summary[0].q50);
  EXPECT_LT(a.summary[3].q50, a.summary[1].q50);
}

TEST(Experiments, StructureRecordsAtCheckpoints) {
  const auto cfg = config_from_json(
      json::parse(R"({"graphs": 2, "trajectories": 6, "checkpoints": [3, 6], "num_nodes": 3, "max_indegree": 1})"),
      Kind::structure);
  const auto r = structure_experiment(cfg);
  ASSERT_EQ(r.records.size(), 2u * 2u * 2u);
  for (const auto& rec : r.records) {
    EXPECT_TRUE(rec.trajectories == 3 || rec.trajectories == 6);
    EXPECT_TRUE(rec.model == "augmented" || rec.model == "baseline");
    EXPECT_GE(rec.auroc, 0.0);
    EXPECT_LE(rec.auroc, 1.0);
  }
  EXPECT_EQ(score_records_csv(r, false), score_records_csv(structure_experiment(cfg), false));
}

TEST(Experiments, ExponentialFamilyMakesBothLearnersIdentical) {
  const auto cfg = config_from_json(
      json::parse(R"({"family": "exponential", "graphs": 3, "trajectories": 30, "num_nodes": 3, "max_indegree": 2})"),
      Kind::structure);
  const auto r = structure_experiment(cfg);
  for (const auto& rec : r.records)
    if (rec.model == "augmented") {
      const auto it = std::find_if(r.records.begin(), r.records.end(), [&](const ScoreRecord& o) {
        return o.model == "baseline" && o.graph == rec.graph && o.trajectories == rec.trajectories;
      });
      ASSERT_NE(it, r.records.end());
      EXPECT_DOUBLE_EQ(rec.auroc, it->auroc);
    }
}

TEST(Experiments, ShapeSweepTagsShapes) {
  const auto cfg = config_from_json(
      json::parse(R"({"graphs": 2, "trajectories": 5, "shapes": [1, 4], "num_nodes": 3, "max_indegree": 1})"),
      Kind::shape_sweep);
  const auto r = shape_sweep(cfg);
  ASSERT_EQ(r.records.size(), 2u * 2u * 2u);
  for (const auto& rec : r.records) {
    EXPECT_TRUE(rec.shape == 1.0 || rec.shape == 4.0);
    EXPECT_EQ(rec.trajectories, 5u);
  }
}

TEST(Experiments, RunAndWriteProducesFiles) {
  const auto dir = testing_support::scratch_dir("experiments_out").string();
  const auto cfg = config_from_json(json::parse(R"({"replicates": 2, "sizes": [20]})"), Kind::mse);
  const auto summary = run_and_write(Kind::mse, cfg, dir);
  EXPECT_EQ(summary["experiment"], "mse");
  for (const char* f : {"mse_errors.csv", "mse_summary.csv", "summary.json"})
    EXPECT_TRUE(std::filesystem::exists(dir + "/" + f)) << f;
  const auto j = json::parse(testing_support::read_file(dir + "/summary.json"));
  EXPECT_EQ(j, summary);
}
