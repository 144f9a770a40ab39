#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "clockctbn/random.hpp"
#include "clockctbn/simulator.hpp"
#include "support.hpp"

using namespace clockctbn;
using testing_support::uniform_model;

namespace {

NetworkModel two_weibull() { return uniform_model(Graph(2), {2, 2}, SurvivalParams::weibull(2.0, 1.0)); }

NetworkModel two_exponential(double r0, double r1) {
  return testing_support::model_from(Graph(2), {2, 2}, Family::exponential,
                                     [&](const ParamKey& k) { return SurvivalParams::exponential(k.node == 0 ? r0 : r1); });
}

}  // namespace

TEST(GlobalSurvival, SingleNodeEqualsLocal) {
  const auto m = uniform_model(Graph(1), {2}, SurvivalParams::gamma(2.5, 1.5));
  const auto st = ClockedState::at_rest({0});
  EXPECT_NEAR(global_log_survival(m, st, 1.3), log_survival(SurvivalParams::gamma(2.5, 1.5), 1.3), 1e-14);
  EXPECT_NEAR(global_survival_log_density(m, st, 1.3), log_density(SurvivalParams::gamma(2.5, 1.5), 1.3), 1e-12);
}

TEST(GlobalSurvival, ExponentialIsMemoryless) {
  const auto m = two_exponential(1.0, 3.0);
  const ClockedState st({0, 1}, {2.0, 7.0});
  EXPECT_NEAR(global_log_survival(m, st, 0.5), -2.0, 1e-14);
  EXPECT_NEAR(global_survival_log_density(m, st, 0.5), std::log(4.0) - 2.0, 1e-14);
}

TEST(GlobalSurvival, TwoNodeWeibullHandValues) {
  const auto m = two_weibull();
  const ClockedState st({0, 0}, {1.0, 0.0});
  EXPECT_NEAR(global_log_survival(m, st, 1.0), -4.0, 1e-14);
  EXPECT_NEAR(global_survival_log_density(m, st, 1.0), std::log(6.0) - 4.0, 1e-14);
}

TEST(GlobalSurvival, DensityIsMinusDerivativeOfSurvival) {
  const auto m = two_weibull();
  const ClockedState st({0, 1}, {0.4, 1.3});
  for (double s : {0.2, 0.7, 1.5}) {
    const double h = 1e-6;
    const double fd = -(std::exp(global_log_survival(m, st, s + h)) - std::exp(global_log_survival(m, st, s - h))) / (2 * h);
    EXPECT_NEAR(std::exp(global_survival_log_density(m, st, s)), fd, 1e-7);
  }
}

TEST(Categoricals, Examples) {
  const auto one = uniform_model(Graph(1), {2}, SurvivalParams::weibull(2.0, 1.0));
  EXPECT_NEAR(transition_categoricals(one, ClockedState({0}, {0.5}), 1.0).node_probs[0], 1.0, 1e-15);

  const auto ex = two_exponential(1.0, 3.0);
  const auto c = transition_categoricals(ex, ClockedState({0, 0}, {4.0, 0.1}), 2.3);
  EXPECT_NEAR(c.node_probs[0], 0.25, 1e-14);
  EXPECT_NEAR(c.node_probs[1], 0.75, 1e-14);

  const auto wb = transition_categoricals(two_weibull(), ClockedState({0, 0}, {1.0, 0.0}), 1.0);
  EXPECT_NEAR(wb.node_probs[0], 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(wb.node_probs[1], 1.0 / 3.0, 1e-14);
  EXPECT_EQ(wb.next_state_probs[0], (std::vector<double>{0.0, 1.0}));
}

TEST(Categoricals, StalledProcess) {
  // Weibull k=2 has zero hazard at age zero.
  EXPECT_THROW(transition_categoricals(two_weibull(), ClockedState::at_rest({0, 0}), 0.0), StalledProcess);
}

TEST(Gillespie, SingleExponentialScripted) {
  const auto m = uniform_model(Graph(1), {2}, SurvivalParams::exponential(1.0));
  ScriptedUniforms u({std::exp(-2.0), 0.5, 0.999});
  const auto t = gillespie_sample(m, ClockedState::at_rest({0}), 2.5, u, 1);
  ASSERT_EQ(t.events.size(), 1u);
  EXPECT_NEAR(t.events[0].time, 2.0, 1e-14);
  EXPECT_EQ(t.events[0].state, 1);
}

TEST(Gillespie, TwoNodeWeibullHandTrace) {
  // Step 1: tau=(0,0); residuals sqrt(1)=1 and sqrt(4)=2, node 0 jumps at 1.
  // Step 2: tau=(0,1); residuals sqrt(4)=2 and sqrt(1+3)-1=1, node 1 jumps at 2.
  // Step 3: tau=(1,0); residuals sqrt(1+8)-1=2 and 3, next jump at 4 > 3.5.
  ScriptedUniforms u({std::exp(-1.0), std::exp(-4.0), 0.5,  //
                      std::exp(-4.0), std::exp(-3.0), 0.5,  //
                      std::exp(-8.0), std::exp(-9.0), 0.5});
  const auto t = gillespie_sample(two_weibull(), ClockedState::at_rest({0, 0}), 3.5, u);
  ASSERT_EQ(t.events.size(), 2u);
  EXPECT_NEAR(t.events[0].time, 1.0, 1e-12);
  EXPECT_EQ(t.events[0].node, 0u);
  EXPECT_EQ(t.events[0].state, 1);
  EXPECT_NEAR(t.events[1].time, 2.0, 1e-12);
  EXPECT_EQ(t.events[1].node, 1u);
  EXPECT_EQ(t.events[1].state, 1);
  EXPECT_EQ(t.end_time, 3.5);
  EXPECT_EQ(u.consumed(), 9u);
}

TEST(Gillespie, NextStateFollowsTheta) {
  // Three-state node; theta row from state 0 is (0, 0.2, 0.8).
  std::map<ParamKey, SurvivalParams> phi;
  std::map<ParamKey, std::vector<double>> theta;
  for (int x = 0; x < 3; ++x) phi.emplace(ParamKey{0, x, 0}, SurvivalParams::exponential(1.0));
  theta[{0, 0, 0}] = {0.0, 0.2, 0.8};
  theta[{0, 1, 0}] = {0.5, 0.0, 0.5};
  theta[{0, 2, 0}] = {1.0, 0.0, 0.0};
  const NetworkModel m(Graph(1), {3}, Family::exponential, phi, theta);
  ScriptedUniforms a({0.5, 0.1});
  EXPECT_EQ(gillespie_sample(m, ClockedState::at_rest({0}), 10.0, a, 1).events[0].state, 1);
  ScriptedUniforms b({0.5, 0.3});
  EXPECT_EQ(gillespie_sample(m, ClockedState::at_rest({0}), 10.0, b, 1).events[0].state, 2);
}

TEST(Gillespie, ValidTrajectoriesAndHorizon) {
  Rng rng(3);
  const Graph g(3, {{0, 1}, {1, 2}, {2, 0}});
  const auto m = uniform_model(g, {2, 3, 2}, SurvivalParams::gamma(3.0, 2.0));
  for (int i = 0; i < 50; ++i) {
    const auto t = gillespie_sample(m, ClockedState::at_rest({1, 2, 0}), 6.0, rng);
    EXPECT_NO_THROW(validate_trajectory(t, m.cardinalities()));
    EXPECT_EQ(t.end_time, 6.0);
  }
}

TEST(Gillespie, SampleTransitionsExactCount) {
  Rng rng(9);
  const auto t = sample_transitions(two_weibull(), ClockedState::at_rest({0, 1}), 25, rng);
  EXPECT_EQ(t.events.size(), 25u);
  EXPECT_GT(t.end_time, t.events.back().time);
}

TEST(Gillespie, FixedSeedIsReproducible) {
  Rng a(77);
  Rng b(77);
  const auto m = uniform_model(Graph(2, {{0, 1}}), {2, 2}, SurvivalParams::weibull(3.0, 2.0));
  EXPECT_EQ(gillespie_sample(m, ClockedState::at_rest({0, 0}), 20.0, a),
            gillespie_sample(m, ClockedState::at_rest({0, 0}), 20.0, b));
}

TEST(Gillespie, FirstJumpLawAndWinnerFrequencies) {
  // Distributional check: first holding time against the global survival
  // function, winner frequencies against the integrated hazard shares.
  const auto m = testing_support::model_from(Graph(2), {2, 2}, Family::weibull, [](const ParamKey& k) {
    return k.node == 0 ? SurvivalParams::weibull(2.0, 1.0) : SurvivalParams::weibull(0.8, 0.6);
  });
  const ClockedState init({0, 0}, {0.5, 0.0});
  Rng rng(21);
  const int runs = 20000;
  std::vector<double> first(runs);
  std::vector<double> wins(2, 0.0);
  for (int i = 0; i < runs; ++i) {
    const auto t = gillespie_sample(m, init, 1e9, rng, 1);
    first[i] = t.events[0].time;
    wins[t.events[0].node] += 1.0;
  }
  const double d = testing_support::ks_statistic(first, [&](double s) { return -std::expm1(global_log_survival(m, init, s)); });
  EXPECT_LT(d, 0.015);
  const double p0 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double s) {
        return hazard(m.phi(0, 0, 0), 0.5 + s) * std::exp(global_log_survival(m, init, s));
      },
      0.0, std::numeric_limits<double>::infinity());
  EXPECT_GT(testing_support::chi_square_pvalue(wins, {p0, 1.0 - p0}), 0.01);
}
