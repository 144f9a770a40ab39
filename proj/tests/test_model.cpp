#include <gtest/gtest.h>

#include "clockctbn/model.hpp"
#include "support.hpp"

using namespace clockctbn;

TEST(Graph, ParentsAreSortedAndSelfLoopsRejected) {
  Graph g(3, {{2, 0}, {1, 0}});
  EXPECT_EQ(g.parents(0), (std::vector<NodeId>{1, 2}));
  EXPECT_TRUE(g.parents(1).empty());
  EXPECT_THROW(Graph(2, {{1, 1}}), ModelError);
  EXPECT_THROW(Graph(2, {{0, 5}}), ModelError);
}

TEST(Graph, CyclesAreAllowed) {
  Graph g(2, {{0, 1}, {1, 0}});
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 0));
  const auto a = g.adjacency();
  EXPECT_EQ(a[0][1], 1.0);
  EXPECT_EQ(a[0][0], 0.0);
}

TEST(ParentState, RadixEncoding) {
  const std::vector<std::size_t> cards{2, 3, 2};
  const std::vector<NodeId> none;
  const std::vector<LocalState> s0{1, 2, 0};
  EXPECT_EQ(parent_state_index(none, cards, s0), 0u);
  const std::vector<NodeId> p02{0, 2};
  EXPECT_EQ(parent_state_index(p02, cards, std::vector<LocalState>{1, 0, 0}), 1u);
  const std::vector<NodeId> p1{1};
  EXPECT_EQ(parent_state_index(p1, cards, std::vector<LocalState>{0, 2, 0}), 2u);
  // Node 0 is the least significant digit.
  EXPECT_EQ(parent_state_index(p02, cards, std::vector<LocalState>{1, 0, 1}), 3u);
  EXPECT_EQ(num_parent_states(p02, cards), 4u);
  EXPECT_EQ(num_parent_states(none, cards), 1u);
}

TEST(ParentState, IndexIsBijective) {
  const std::vector<std::size_t> cards{3, 2, 4, 2};
  const std::vector<NodeId> parents{0, 2, 3};
  std::set<std::size_t> seen;
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 4; ++c)
      for (int d = 0; d < 2; ++d) seen.insert(parent_state_index(parents, cards, std::vector<LocalState>{a, 1, c, d}));
  EXPECT_EQ(seen.size(), num_parent_states(parents, cards));
  EXPECT_EQ(*seen.rbegin(), num_parent_states(parents, cards) - 1);
}

TEST(ParamKey, RoundTrip) {
  const ParamKey k{3, 1, 12};
  EXPECT_EQ(k.str(), "3/1/12");
  EXPECT_EQ(ParamKey::parse("3/1/12"), k);
  EXPECT_THROW(ParamKey::parse("3/1"), ModelError);
  EXPECT_THROW(ParamKey::parse("3//1"), ModelError);
  EXPECT_THROW(ParamKey::parse("a/1/2"), ModelError);
}

TEST(SurvivalParams, Validation) {
  EXPECT_NO_THROW(SurvivalParams::weibull(2.0, 1.0));
  EXPECT_THROW(SurvivalParams::weibull(-1.0, 1.0), ModelError);
  EXPECT_THROW(SurvivalParams::gamma(1.0, 0.0), ModelError);
  EXPECT_THROW(SurvivalParams(Family::weibull, std::vector<double>{1.0}), ModelError);
  EXPECT_EQ(parse_family("rayleigh"), Family::rayleigh);
  EXPECT_THROW(parse_family("lognormal"), ModelError);
}

TEST(TransitionRow, MustBeStochasticWithZeroDiagonal) {
  EXPECT_NO_THROW(validate_transition_row(std::vector<double>{0.0, 0.3, 0.7}, 0, "row"));
  EXPECT_THROW(validate_transition_row(std::vector<double>{0.1, 0.2, 0.7}, 0, "row"), ModelError);
  EXPECT_THROW(validate_transition_row(std::vector<double>{0.0, 0.3, 0.6}, 0, "row"), ModelError);
  EXPECT_THROW(validate_transition_row(std::vector<double>{0.0, 1.2, -0.2}, 0, "row"), ModelError);
}

TEST(NetworkModel, MissingOrExtraKeysRejected) {
  Graph g(1);
  std::map<ParamKey, SurvivalParams> phi{{{0, 0, 0}, SurvivalParams::exponential(1.0)}};
  std::map<ParamKey, std::vector<double>> theta{{{0, 0, 0}, {0.0, 1.0}}};
  EXPECT_THROW(NetworkModel(g, {2}, Family::exponential, phi, theta), ModelError);
  phi.emplace(ParamKey{0, 1, 0}, SurvivalParams::exponential(2.0));
  theta.emplace(ParamKey{0, 1, 0}, std::vector<double>{1.0, 0.0});
  EXPECT_NO_THROW(NetworkModel(g, {2}, Family::exponential, phi, theta));
  phi.emplace(ParamKey{0, 0, 1}, SurvivalParams::exponential(2.0));
  EXPECT_THROW(NetworkModel(g, {2}, Family::exponential, phi, theta), ModelError);
}

TEST(NetworkModel, FamilyMismatchRejected) {
  Graph g(1);
  std::map<ParamKey, SurvivalParams> phi{{{0, 0, 0}, SurvivalParams::exponential(1.0)},
                                         {{0, 1, 0}, SurvivalParams::weibull(1.0, 1.0)}};
  std::map<ParamKey, std::vector<double>> theta{{{0, 0, 0}, {0.0, 1.0}}, {{0, 1, 0}, {1.0, 0.0}}};
  EXPECT_THROW(NetworkModel(g, {2}, Family::exponential, phi, theta), ModelError);
}

TEST(NetworkModel, KeysCoverEveryConfiguration) {
  const Graph g(3, {{0, 2}, {1, 2}});
  const auto m = testing_support::uniform_model(g, {2, 3, 2}, SurvivalParams::exponential(1.0));
  // node 0: 2 keys, node 1: 3 keys, node 2: 2 states x 6 parent states.
  EXPECT_EQ(m.keys().size(), 2u + 3u + 12u);
  EXPECT_EQ(m.num_parent_states(2), 6u);
}

TEST(Trajectory, ValidationRejectsBadEvents) {
  Trajectory t;
  t.initial = ClockedState::at_rest({0, 0});
  t.end_time = 3.0;
  t.events = {{1.0, 0, 1}, {0.5, 1, 1}};
  EXPECT_THROW(validate_trajectory(t), InvalidTrajectory);
  t.events = {{1.0, 0, 1}, {1.0, 1, 1}};
  EXPECT_THROW(validate_trajectory(t), InvalidTrajectory);
  t.events = {{1.0, 0, 0}};
  EXPECT_THROW(validate_trajectory(t), InvalidTrajectory);
  t.events = {{3.0, 0, 1}};
  EXPECT_THROW(validate_trajectory(t), InvalidTrajectory);
  t.events = {{1.0, 0, 2}};
  EXPECT_NO_THROW(validate_trajectory(t));
  const std::vector<std::size_t> cards{2, 2};
  EXPECT_THROW(validate_trajectory(t, cards), InvalidTrajectory);
}

TEST(Windows, SingleNodeOneEvent) {
  Trajectory t;
  t.initial = ClockedState::at_rest({0});
  t.events = {{2.0, 0, 1}};
  t.end_time = 3.0;
  const auto w = derive_windows(t);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].entry.states[0], 0);
  EXPECT_EQ(w[0].entry.clocks[0], 0.0);
  EXPECT_EQ(w[0].duration, 2.0);
  ASSERT_TRUE(w[0].outcome.has_value());
  EXPECT_EQ(*w[0].outcome, (Transition{0, 1}));
  EXPECT_EQ(w[1].entry.states[0], 1);
  EXPECT_EQ(w[1].entry.clocks[0], 0.0);
  EXPECT_EQ(w[1].duration, 1.0);
  EXPECT_TRUE(w[1].censored());
}

TEST(Windows, NoEventsGivesOneCensoredWindow) {
  Trajectory t;
  t.initial = ClockedState::at_rest({1, 0});
  t.end_time = 5.0;
  const auto w = derive_windows(t);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].duration, 5.0);
  EXPECT_TRUE(w[0].censored());
}

TEST(Windows, ClockPropagationTwoNodes) {
  Trajectory t;
  t.initial = ClockedState::at_rest({0, 0});
  t.events = {{1.0, 0, 1}, {1.5, 1, 1}};
  t.end_time = 2.0;
  const auto w = derive_windows(t);
  ASSERT_EQ(w.size(), 3u);
  // Node 0 resets at t=1; node 1 has aged 1.0 by then.
  EXPECT_DOUBLE_EQ(w[1].entry.clocks[0], 0.0);
  EXPECT_DOUBLE_EQ(w[1].entry.clocks[1], 1.0);
  // Window 2: node 0 aged 0.5 since its reset, node 1 just reset.
  EXPECT_DOUBLE_EQ(w[2].entry.clocks[0], 0.5);
  EXPECT_DOUBLE_EQ(w[2].entry.clocks[1], 0.0);
}

TEST(Windows, AssembleInvertsDerive) {
  Trajectory t;
  t.initial = ClockedState({0, 2, 1}, {0.3, 0.0, 1.7});
  t.events = {{0.2, 2, 0}, {0.9, 1, 0}, {1.4, 0, 1}, {2.2, 2, 1}};
  t.end_time = 4.0;
  const auto w = derive_windows(t);
  EXPECT_EQ(assemble_trajectory(w), t);
}

TEST(Windows, ClocksMatchTimeSinceLastOwnJump) {
  // Property: every window's entry clock of node n equals the time since n's
  // last jump (or since 0 plus its initial clock).
  Trajectory t;
  t.initial = ClockedState({0, 0, 0}, {0.5, 0.0, 2.0});
  t.events = {{0.4, 1, 1}, {0.7, 0, 1}, {1.1, 1, 0}, {1.9, 2, 1}, {2.5, 0, 0}};
  t.end_time = 3.0;
  const auto w = derive_windows(t);
  std::vector<double> last_jump{-0.5, 0.0, -2.0};
  double now = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (NodeId n = 0; n < 3; ++n) EXPECT_NEAR(w[i].entry.clocks[n], now - last_jump[n], 1e-12);
    if (i < t.events.size()) {
      now = t.events[i].time;
      last_jump[t.events[i].node] = now;
    }
  }
}
