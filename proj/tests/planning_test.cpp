#include "ldc/oracles.hpp"
#include "ldc/planning.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace ldc {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

AggregatedInterval box(int M, double lo, double hi) {
  return {Eigen::VectorXd::Constant(M, lo), Eigen::VectorXd::Constant(M, hi)};
}

double mixture(const Eigen::VectorXd& sigma, const Eigen::VectorXd& q, double eta) {
  return softmax_z(sigma, eta).dot(q);
}

TEST(ThresholdSet, MidpointsOfSortedValues) {
  EXPECT_EQ(threshold_set(vec({1, 2, 3})), (std::vector<double>{1.5, 2.5}));
  EXPECT_EQ(threshold_set(vec({3, 1, 2})), (std::vector<double>{1.5, 2.5}));
  EXPECT_TRUE(threshold_set(vec({0.7, 0.7, 0.7})).empty());
  EXPECT_EQ(threshold_set(vec({2, 1, 2})), (std::vector<double>{1.5}));
  EXPECT_THROW(threshold_set(vec({1, std::numeric_limits<double>::quiet_NaN()})),
               std::invalid_argument);
}

TEST(ApplyThreshold, PicksLowerBelowAndUpperOtherwise) {
  const Eigen::VectorXd q = vec({1, 2, 3});
  const AggregatedInterval ci = box(2, 0.0, 5.0);
  EXPECT_EQ(apply_threshold(1.5, q, ci), vec({0, 5}));
  EXPECT_EQ(apply_threshold(0.0, q, ci), vec({5, 5}));
  EXPECT_EQ(apply_threshold(10.0, q, ci), vec({0, 0}));
  // Q_i equal to t takes the upper endpoint.
  EXPECT_EQ(apply_threshold(2.0, q, ci), vec({0, 5}));
  const AggregatedInterval point{vec({0.3, -0.2}), vec({0.3, -0.2})};
  for (double t : {-1.0, 1.5, 2.5, 9.0}) EXPECT_EQ(apply_threshold(t, q, point), point.lower);
  EXPECT_THROW(apply_threshold(1.0, vec({1, 2}), ci), std::invalid_argument);
}

TEST(OptimisticCombine, DegenerateIntervalEvaluatesThePoint) {
  const Eigen::VectorXd q = vec({0.2, 0.9, 0.4});
  const AggregatedInterval point{vec({0.5, -1.0}), vec({0.5, -1.0})};
  const OptimisticChoice c = optimistic_combine(q, point, 0.8);
  EXPECT_NEAR(c.value, mixture(point.lower, q, 0.8), 1e-15);
}

TEST(OptimisticCombine, ScalarCaseTakesTheBetterEndpoint) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const double lo = rng.uniform(-3, 1), hi = lo + rng.uniform(0.01, 3);
    const Eigen::VectorXd q = vec({rng.uniform(), rng.uniform()});
    const AggregatedInterval ci{vec({lo}), vec({hi})};
    const double expected = std::max(mixture(vec({lo}), q, 1.3), mixture(vec({hi}), q, 1.3));
    EXPECT_NEAR(optimistic_combine(q, ci, 1.3).value, expected, 1e-15);
  }
  // Symmetric interval, the free class pays more: the upper corner wins.
  EXPECT_NEAR(brute_force_extreme_max(vec({1, 0}), box(1, -1, 1), 1.0), 1.0 / (1.0 + std::exp(-1.0)),
              1e-15);
}

TEST(OptimisticCombine, MatchesCornerEnumeration) {
  Rng rng(3);
  for (int trial = 0; trial < 10000; ++trial) {
    const int M = 1 + rng.uniform_int(5);
    Eigen::VectorXd q(M + 1);
    for (int i = 0; i <= M; ++i) q[i] = rng.uniform(-2.0, 5.0);
    if (trial % 7 == 0) q[rng.uniform_int(M + 1)] = q[0];  // ties
    AggregatedInterval ci = AggregatedInterval::zero(M);
    for (int i = 0; i < M; ++i) {
      ci.lower[i] = rng.uniform(-4.0, 2.0);
      ci.upper[i] = ci.lower[i] + rng.uniform(1e-3, 4.0);
    }
    const double eta = rng.uniform(0.05, 3.0);
    const OptimisticChoice c = optimistic_combine(q, ci, eta);
    const double brute = brute_force_extreme_max(q, ci, eta);
    ASSERT_NEAR(c.value, brute, 1e-9) << "trial " << trial;
    EXPECT_NEAR(mixture(c.sigma, q, eta), c.value, 1e-12);
    EXPECT_TRUE(ci.contains(c.sigma));
  }
}

TEST(OptimisticCombine, CornerMaximumMatchesAGridSearch) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd q = vec({rng.uniform(), rng.uniform(), rng.uniform()});
    const AggregatedInterval ci{vec({rng.uniform(-1, 0), rng.uniform(-1, 0)}),
                                vec({rng.uniform(0, 1), rng.uniform(0, 1)})};
    // Grid of spacing at most 1e-3 that includes both endpoints of each side.
    const int n0 = static_cast<int>(std::ceil((ci.upper[0] - ci.lower[0]) / 1e-3));
    const int n1 = static_cast<int>(std::ceil((ci.upper[1] - ci.lower[1]) / 1e-3));
    double grid = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd sigma(2);
    for (int i = 0; i <= n0; ++i) {
      for (int j = 0; j <= n1; ++j) {
        sigma << ci.lower[0] + (ci.upper[0] - ci.lower[0]) * i / n0,
            ci.lower[1] + (ci.upper[1] - ci.lower[1]) * j / n1;
        grid = std::max(grid, mixture(sigma, q, 1.0));
      }
    }
    const double corners = brute_force_extreme_max(q, ci, 1.0);
    EXPECT_GE(corners, grid - 1e-12);
    EXPECT_NEAR(corners, grid, 1e-6);
  }
}

TEST(OptimisticCombine, TooManyCornersThrow) {
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(22);
  EXPECT_THROW(brute_force_extreme_max(q, box(21, 0, 1), 1.0), SizeLimitError);
}

// Planner model built from an environment, with optional radii around f*.
PlannerModel model_of(const LogisticDcmdp& env, double radius, double reward_bonus = 0.0) {
  PlannerModel m;
  m.num_states = env.num_states;
  m.num_actions = env.num_actions;
  m.num_free_contexts = env.num_free_contexts;
  m.horizon = env.horizon;
  m.alpha = env.history_discount;
  m.eta = env.temperature;
  const CellLayout cells = m.layout();
  m.rewards.resize(cells.size());
  for (int h = 0; h < env.horizon; ++h)
    for (int s = 0; s < env.num_states; ++s)
      for (int a = 0; a < env.num_actions; ++a)
        for (int x = 0; x < env.num_contexts(); ++x)
          m.rewards[cells(h, s, a, x)] = env.reward(x, s, a) + reward_bonus;
  m.transitions.resize(cells.size() * env.num_states);
  for (int h = 0; h < env.horizon; ++h)
    for (int s = 0; s < env.num_states; ++s)
      for (int a = 0; a < env.num_actions; ++a)
        for (int x = 0; x < env.num_contexts(); ++x)
          for (int s2 = 0; s2 < env.num_states; ++s2)
            m.transitions[cells(h, s, a, x) * env.num_states + s2] = env.transition(x, s, a)[s2];
  const std::vector<double> radii(cells.size(), radius);
  m.features = feature_intervals(env.latent_features, radii, env.feature_bounds, false);
  return m;
}

TEST(OptimisticPlanner, ExactModelReproducesTheOptimalValue) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LogisticDcmdp env = testing::random_env(seed, 2, 2, 1 + seed % 2, 3, 0.6, 1.5);
    OptimisticPlanner planner(model_of(env, 0.0), {}, env.initial_state);
    EXPECT_NEAR(planner.initial_value(), sigma_augmented_dp(env).value, 1e-10) << "seed " << seed;
  }
}

TEST(OptimisticPlanner, SingleStepMatchesHandEnumeration) {
  LogisticDcmdp env = make_empty_dcmdp(1, 2, 1, 1, 0.5);
  env.temperature = 1.0;
  // At h = 1 the statistic is zero, so both contexts are equally likely.
  env.rewards = {0.9, 0.1, 0.3, 0.8};  // [x][s][a]
  PlannerModel m = model_of(env, 0.5);
  OptimisticPlanner planner(m, {}, 0);
  EXPECT_NEAR(planner.initial_value(), std::max(0.5 * (0.9 + 0.3), 0.5 * (0.1 + 0.8)), 1e-15);
  EXPECT_EQ(planner.act(0, 0, planner.initial_interval()), 0);
}

TEST(OptimisticPlanner, OptimisticWhenTheTruthIsInsideTheBounds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 1000);
    const LogisticDcmdp env = testing::random_env(seed, 2, 2, 1 + seed % 2, 3, rng.uniform(), 1.0);
    PlannerModel m = model_of(env, 0.0);
    // Perturbed estimates with bounds wide enough to contain the truth.
    FeatureTable f_hat = env.latent_features;
    std::vector<double> radii(f_hat.num_cells());
    for (std::size_t cell = 0; cell < radii.size(); ++cell) {
      radii[cell] = rng.uniform(0.0, 0.4);
      for (int i = 0; i < env.num_free_contexts; ++i)
        f_hat.values()[cell * env.num_free_contexts + i] += rng.uniform(-radii[cell], radii[cell]);
    }
    m.features = feature_intervals(f_hat, radii, env.feature_bounds, true);
    const int S = env.num_states;
    for (std::size_t cell = 0; cell < m.rewards.size(); ++cell) {
      const double shift = rng.uniform(0.0, 0.2);
      double& p0 = m.transitions[cell * S];
      double& p1 = m.transitions[cell * S + 1];
      const double moved = std::min(shift, p0);
      const double l1 = 2.0 * moved;
      p0 -= moved;
      p1 += moved;
      m.rewards[cell] += rng.uniform(0.0, 0.1) + env.horizon * l1;
    }
    OptimisticPlanner planner(std::move(m), {}, env.initial_state);
    EXPECT_GE(planner.initial_value(), exact_history_dp(env).value - 1e-10) << "seed " << seed;
  }
}

TEST(OptimisticPlanner, WiderBoundsNeverLowerTheValue) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LogisticDcmdp env = testing::random_env(seed + 50, 2, 2, 2, 3, 0.7, 1.0);
    double previous = -1.0;
    for (double radius : {0.0, 0.1, 0.3, 0.6}) {
      OptimisticPlanner planner(model_of(env, radius, 0.0), {}, env.initial_state);
      EXPECT_GE(planner.initial_value(), previous - 1e-12);
      previous = planner.initial_value();
    }
    OptimisticPlanner bonus(model_of(env, 0.6, 0.05), {}, env.initial_state);
    EXPECT_GE(bonus.initial_value(), previous - 1e-12);
  }
}

TEST(OptimisticPlanner, ValuesAreTruncatedToTheHorizon) {
  const LogisticDcmdp env = testing::random_env(70, 2, 2, 1, 3, 0.5, 1.0);
  PlannerConfig config;
  config.record_trace = true;
  OptimisticPlanner planner(model_of(env, 0.3, 2.0), config, env.initial_state);
  EXPECT_EQ(planner.initial_value(), 3.0);
  const nlohmann::json trace = planner.trace_json();
  ASSERT_FALSE(trace.empty());
  for (const auto& node : trace) {
    EXPECT_GE(node.at("value").get<double>(), 0.0);
    EXPECT_LE(node.at("value").get<double>(), 3.0);
  }
}

TEST(OptimisticPlanner, QuantizedValueSandwichesTheExactOne) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LogisticDcmdp env = testing::random_env(seed + 80, 2, 2, 2, 3, 0.8, 1.0);
    const PlannerModel m = model_of(env, 0.2);
    const double exact = OptimisticPlanner(m, {}, env.initial_state).initial_value();
    double previous_gap = std::numeric_limits<double>::infinity();
    for (double eps : {0.1, 0.01}) {
      PlannerConfig config;
      config.backend = PlannerBackend::kQuantized;
      config.epsilon = eps;
      const double quantized = OptimisticPlanner(m, config, env.initial_state).initial_value();
      const double gap = quantized - exact;
      EXPECT_GE(gap, -1e-12) << "eps " << eps;
      EXPECT_LE(gap, previous_gap + 1e-12) << "eps " << eps;
      previous_gap = gap;
    }
    EXPECT_LT(previous_gap, 0.05);
  }
}

TEST(OptimisticPlanner, NodeBudgetIsEnforced) {
  const LogisticDcmdp env = testing::random_env(90, 2, 2, 2, 4, 0.9, 1.0);
  PlannerConfig config;
  config.node_budget = 10;
  try {
    OptimisticPlanner(model_of(env, 0.1), config, env.initial_state);
    FAIL() << "expected SizeLimitError";
  } catch (const SizeLimitError& e) {
    EXPECT_NE(std::string(e.what()).find("quantized"), std::string::npos) << e.what();
  }
}

TEST(OptimisticPlanner, RejectsInconsistentModels) {
  const LogisticDcmdp env = testing::random_env(91, 2, 2, 1, 2, 0.5, 1.0);
  PlannerModel m = model_of(env, 0.1);
  m.rewards.pop_back();
  EXPECT_THROW(OptimisticPlanner(m, {}, 0), std::invalid_argument);
  EXPECT_THROW(OptimisticPlanner(model_of(env, 0.1), {}, 5), std::invalid_argument);
}

}  // namespace
}  // namespace ldc
