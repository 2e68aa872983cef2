#include "ldc/gen_env.hpp"
#include "ldc/oracles.hpp"
#include "ldc/simulate.hpp"
#include "ldc/special_cases.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace ldc {
namespace {

const PolicyFn kFirstAction = [](int, int, History) { return 0; };

// Deterministic policy that depends on the whole history.
int history_policy(int h, int state, History history) {
  int code = h + 3 * state;
  for (const Step& step : history) code += step.action + 2 * step.context;
  return code % 2;
}

TEST(Rollout, SingleStepReturnsThatReward) {
  const LogisticDcmdp env = testing::random_env(3, 2, 3, 2, 1, 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Trajectory t = rollout_episode(env, PolicyFn([](int, int, History) { return 2; }), seed);
    ASSERT_EQ(t.steps.size(), 1u);
    EXPECT_EQ(t.episode_return, t.steps[0].reward);
    EXPECT_EQ(t.steps[0].reward, env.reward(t.steps[0].context, env.initial_state, 2));
  }
}

TEST(Rollout, TrajectoryInvariants) {
  const LogisticDcmdp env = testing::random_env(4, 3, 2, 2, 6, 0.8);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Trajectory t = rollout_episode(env, PolicyFn(history_policy), seed);
    ASSERT_EQ(t.steps.size(), 6u);
    EXPECT_EQ(t.steps[0].state, env.initial_state);
    double total = 0.0;
    for (std::size_t h = 0; h < t.steps.size(); ++h) {
      const Step& step = t.steps[h];
      EXPECT_EQ(step.reward, env.reward(step.context, step.state, step.action));
      EXPECT_EQ(step.action, history_policy(static_cast<int>(h), step.state,
                                            History(t.steps.data(), h)));
      total += step.reward;
    }
    EXPECT_DOUBLE_EQ(t.episode_return, total);
  }
}

TEST(Rollout, InvalidActionNamesStepAndAction) {
  const LogisticDcmdp env = testing::random_env(5, 2, 2, 1, 3, 0.5);
  const PolicyFn bad = [](int h, int, History) { return h == 1 ? 7 : 0; };
  try {
    rollout_episode(env, bad, 0);
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("action 7"), std::string::npos) << what;
    EXPECT_NE(what.find("step 1"), std::string::npos) << what;
  }
}

TEST(Rollout, SameSeedSameTrajectory) {
  const LogisticDcmdp env = testing::random_env(6, 3, 2, 2, 5, 0.9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Trajectory a = rollout_episode(env, PolicyFn(history_policy), seed);
    const Trajectory b = rollout_episode(env, PolicyFn(history_policy), seed);
    std::ostringstream sa, sb;
    write_trajectory_rows(sa, 1, a);
    write_trajectory_rows(sb, 1, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.final_state, b.final_state);
  }
}

TEST(Rollout, ContextsAreUniformWithoutFeatures) {
  LogisticDcmdp env = make_empty_dcmdp(2, 2, 2, 3, 0.5);
  for (std::size_t row = 0; row < env.transitions.size() / 2; ++row) {
    env.transitions[2 * row] = row % 2 ? 1.0 : 0.0;
    env.transitions[2 * row + 1] = row % 2 ? 0.0 : 1.0;
  }
  std::vector<int> counts(3, 0);
  const int episodes = 100000;
  for (int k = 0; k < episodes; ++k) {
    const Trajectory t = rollout_episode(env, kFirstAction, derive_seed(9, k));
    ++counts[t.steps[1].context];
  }
  for (int x = 0; x < 3; ++x) EXPECT_NEAR(counts[x] / double(episodes), 1.0 / 3.0, 0.01);
}

TEST(Rollout, TerminationSurvivalMatchesClosedForm) {
  TabularMdp base;
  base.num_states = 1;
  base.num_actions = 1;
  base.horizon = 3;
  base.rewards = {1.0};
  base.transitions = {1.0};
  base.initial_distribution = {1.0};
  const std::vector<double> costs{1.0, 0.5, -0.5};
  const LogisticDcmdp env = make_termdp(base, costs, 1.0);
  const std::vector<double> survival = termdp_survival(costs, 1.0);
  // The return counts the steps taken before reaching the sink.
  double expected_return = 0.0;
  for (int h = 0; h < 3; ++h) expected_return += survival[h];
  EXPECT_NEAR(evaluate_policy_exact(env, kFirstAction), expected_return, 1e-12);
}

TEST(ExactEvaluation, ConstantRewardGivesCTimesH) {
  LogisticDcmdp env = make_empty_dcmdp(2, 2, 1, 4, 0.7);
  std::fill(env.rewards.begin(), env.rewards.end(), 0.3);
  EXPECT_NEAR(evaluate_policy_exact(env, PolicyFn(history_policy)), 1.2, 1e-14);
}

TEST(ExactEvaluation, AgreesWithMonteCarlo) {
  const LogisticDcmdp env = testing::random_env(21, 2, 2, 2, 3, 0.6, 1.5);
  const double exact = evaluate_policy_exact(env, PolicyFn(history_policy));
  const MonteCarloEstimate mc = monte_carlo_value(env, PolicyFn(history_policy), 1000000, 4);
  EXPECT_LT(std::abs(mc.mean - exact), 3.0 * mc.standard_error)
      << "exact " << exact << " mc " << mc.mean << " se " << mc.standard_error;
}

TEST(ExactEvaluation, MixedPolicyIsTheAverageOfItsParts) {
  const LogisticDcmdp env = testing::random_env(22, 2, 2, 1, 3, 0.5);
  const double v0 = evaluate_policy_exact(env, PolicyFn([](int, int, History) { return 0; }));
  const double v1 = evaluate_policy_exact(env, PolicyFn([](int, int, History) { return 1; }));
  // Randomizing only the first action mixes the two stationary policies' values.
  const MixedPolicyFn mixed = [](int h, int, History history, std::span<double> p) {
    const int first = history.empty() ? -1 : history[0].action;
    p[0] = p[1] = 0.0;
    if (h == 0) {
      p[0] = 0.25;
      p[1] = 0.75;
    } else {
      p[first] = 1.0;
    }
  };
  EXPECT_NEAR(evaluate_policy_exact(env, mixed), 0.25 * v0 + 0.75 * v1, 1e-13);
}

TEST(ExactEvaluation, MatchesPreviousContextMdpOnMarkovInstances) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LogisticDcmdp env =
        generate_env({{"family", "markov"}, {"seed", seed}, {"num_actions", 3}});
    const TabularMdp mdp = make_previous_context_mdp(env);
    const TabularSolution sol = value_iteration(mdp);
    const int Y = env.num_contexts() + 1;
    const PolicyFn follow = [&](int h, int s, History history) {
      const int y = history.empty() ? Y - 1 : history.back().context;
      return sol.policy[h][s * Y + y];
    };
    EXPECT_NEAR(evaluate_policy_exact(env, follow), sol.initial_value, 1e-12);
  }
}

TEST(ExactEvaluation, RefusesTreesBeyondTheBudget) {
  const LogisticDcmdp env = testing::random_env(23, 3, 3, 2, 8, 0.5);
  EXPECT_FALSE(history_enumeration_feasible(env));
  EXPECT_THROW(evaluate_policy_exact(env, kFirstAction), SizeLimitError);
}

TEST(TrajectoryRows, OneRowPerStepWithOneBasedIndices) {
  const LogisticDcmdp env = testing::random_env(24, 2, 2, 1, 2, 0.5);
  const Trajectory t = rollout_episode(env, kFirstAction, 3);
  std::ostringstream out;
  write_trajectory_rows(out, 5, t);
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.rfind("5," + std::to_string(rows) + ",", 0), 0u) << line;
  }
  EXPECT_EQ(rows, 2);
  EXPECT_STREQ(kTrajectoryCsvHeader, "episode,h,s,a,x,r");
}

}  // namespace
}  // namespace ldc
