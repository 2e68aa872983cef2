#include "ldc/estimation.hpp"
#include "ldc/simulate.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <tuple>

namespace ldc {
namespace {

int mixed_policy(int h, int state, History history) {
  return (h + state + static_cast<int>(history.size() % 2)) % 2;
}

TEST(EmpiricalModel, OneTrajectoryCountsEachVisitedCellOnce) {
  const LogisticDcmdp env = testing::random_env(1, 2, 2, 1, 4, 0.5);
  EmpiricalModel model(2, 2, 1, 4);
  const Trajectory t = rollout_episode(env, PolicyFn(mixed_policy), 3);
  model.update(t);
  std::int64_t total = 0;
  for (auto c : model.counts()) total += c;
  EXPECT_EQ(total, 4);
  for (int h = 0; h < 4; ++h) {
    const Step& s = t.steps[h];
    EXPECT_EQ(model.count(h, s.state, s.action, s.context), 1);
    EXPECT_DOUBLE_EQ(model.mean_reward(h, s.state, s.action, s.context), s.reward);
  }
  EXPECT_EQ(model.episodes(), 1u);
}

TEST(EmpiricalModel, RepeatingATrajectoryDoublesCounts) {
  const LogisticDcmdp env = testing::random_env(2, 3, 2, 2, 3, 0.5);
  EmpiricalModel once(3, 2, 2, 3), twice(3, 2, 2, 3);
  const Trajectory t = rollout_episode(env, PolicyFn(mixed_policy), 8);
  once.update(t);
  twice.update(t);
  twice.update(t);
  for (std::size_t i = 0; i < once.counts().size(); ++i) {
    EXPECT_EQ(twice.counts()[i], 2 * once.counts()[i]);
  }
}

TEST(EmpiricalModel, EstimatesMatchAnIndependentPass) {
  const LogisticDcmdp env = testing::random_env(3, 2, 2, 1, 3, 0.7, 2.0);
  EmpiricalModel model(2, 2, 1, 3);
  std::map<std::tuple<int, int, int, int>, std::pair<double, int>> sums;
  std::map<std::tuple<int, int, int, int, int>, int> moves;
  for (int k = 0; k < 300; ++k) {
    const Trajectory t = rollout_episode(env, PolicyFn(mixed_policy), derive_seed(5, k));
    model.update(t);
    for (int h = 0; h < 3; ++h) {
      const Step& s = t.steps[h];
      auto& entry = sums[{h, s.state, s.action, s.context}];
      entry.first += s.reward;
      ++entry.second;
      const int next = h + 1 < 3 ? t.steps[h + 1].state : t.final_state;
      ++moves[{h, s.state, s.action, s.context, next}];
    }
  }
  for (const auto& [key, entry] : sums) {
    const auto [h, s, a, x] = key;
    EXPECT_NEAR(model.mean_reward(h, s, a, x), entry.first / entry.second, 1e-12);
    std::vector<double> p(2);
    model.transition_estimate(h, s, a, x, p);
    double total = 0.0;
    for (int next = 0; next < 2; ++next) {
      const auto it = moves.find({h, s, a, x, next});
      const int n = it == moves.end() ? 0 : it->second;
      EXPECT_DOUBLE_EQ(p[next], n / double(entry.second));
      EXPECT_EQ(model.transition_count(h, s, a, x, next), n);
      total += n;
    }
    EXPECT_EQ(total, model.count(h, s, a, x));
  }
  std::vector<double> p(2);
  for (int h = 0; h < 3; ++h)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a)
        for (int x = 0; x < 2; ++x)
          if (model.count(h, s, a, x) == 0) {
            model.transition_estimate(h, s, a, x, p);
            EXPECT_EQ(p, (std::vector<double>{0.5, 0.5}));
            EXPECT_EQ(model.mean_reward(h, s, a, x), 0.0);
          }
}

TEST(EmpiricalModel, RejectsMismatchedTrajectories) {
  EmpiricalModel model(2, 2, 1, 3);
  Trajectory short_one;
  short_one.steps.resize(2);
  EXPECT_THROW(model.update(short_one), std::invalid_argument);
  Trajectory bad_context;
  bad_context.steps.resize(3);
  bad_context.steps[1].context = 2;
  EXPECT_THROW(model.update(bad_context), std::invalid_argument);
  EXPECT_EQ(model.episodes(), 0u);
}

TEST(Bonuses, CapsAndLimits) {
  const BonusSizes sizes{2, 2, 2, 2, 2};
  EXPECT_EQ(reward_bonus(0, sizes, 0.1), 1.0);
  EXPECT_EQ(transition_bonus(0, sizes, 0.1), 4.0);
  double previous = 2.0;
  for (std::int64_t n = 1; n < 10'000'000; n *= 3) {
    const double b = reward_bonus(n, sizes, 0.1);
    EXPECT_LE(b, previous);
    previous = b;
  }
  EXPECT_LT(previous, 2e-3);
  EXPECT_THROW(reward_bonus(1, sizes, 0.0), std::invalid_argument);
  EXPECT_THROW(transition_bonus(1, sizes, 1.0), std::invalid_argument);
}

TEST(Bonuses, FormulaAtOneHundredVisits) {
  const BonusSizes sizes{2, 2, 2, 2, 2};
  const double log_term = std::log(8.0 * 32.0 / 0.1);
  EXPECT_NEAR(reward_bonus(100, sizes, 0.1), std::sqrt(log_term / 100.0), 1e-15);
  EXPECT_NEAR(transition_bonus(100, sizes, 0.1),
              std::min(2.0 * std::sqrt(8.0 * log_term / 100.0), 4.0), 1e-15);
}

double beta_reference(double k, int S, int A, int M, int H, double lambda, double L, double delta) {
  const double d = (M + 1.0) * S * A;
  return std::pow(M, 1.5) * (M + 1.0) * S * A * H / std::sqrt(lambda) *
             (std::log(1.0 + k / (d * lambda)) + 2.0 * std::log(2.0 / delta)) +
         std::sqrt(lambda / (4.0 * M)) + std::sqrt(lambda) * L;
}

TEST(ConfidenceRadii, BetaMatchesTheFormula) {
  for (double k : {0.0, 1.0, 17.0, 1000.0}) {
    for (double lambda : {0.5, 1.0, 4.0}) {
      const RadiusSizes sizes{2, 3, 2, 4};
      EXPECT_NEAR(beta_k(k, sizes, lambda, 1.7, 0.05),
                  beta_reference(k, 2, 3, 2, 4, lambda, 1.7, 0.05), 1e-9);
    }
  }
}

TEST(ConfidenceRadii, GammaMatchesTheFormulaAndDominatesBeta) {
  const RadiusSizes sizes{2, 2, 1, 3};
  const double L = 2.5, lambda = 1.0;
  for (double k : {0.0, 10.0, 500.0}) {
    const double beta = beta_reference(k, 2, 2, 1, 3, lambda, L, 0.1);
    const double appendix = (2.0 + 2.0 * L + std::sqrt(2.0 * (1.0 + L))) * beta +
                            std::sqrt(2.0 * (1.0 + L) * 3.0 * 1.0 / lambda) * beta * beta;
    const double main_text = (2.0 + 2.0 * L * std::sqrt(3.0) + std::sqrt(2.0 * (1.0 + L))) * beta +
                             std::sqrt(2.0 * (1.0 + L) * 3.0 / lambda) * beta * beta;
    EXPECT_NEAR(gamma_k(k, sizes, lambda, L, 0.1) / appendix, 1.0, 1e-12);
    EXPECT_NEAR(gamma_k(k, sizes, lambda, L, 0.1, GammaVariant::kMainText) / main_text, 1.0, 1e-12);
    EXPECT_GE(gamma_k(k, sizes, lambda, L, 0.1), beta_k(k, sizes, lambda, L, 0.1));
  }
}

TEST(ConfidenceRadii, StrictlyIncreasingInK) {
  const RadiusSizes sizes{3, 2, 2, 5};
  double beta_prev = 0.0, gamma_prev = 0.0;
  for (double k = 0.0; k < 5000.0; k += 250.0) {
    const double beta = beta_k(k, sizes, 1.0, 1.0, 0.1);
    const double gamma = gamma_k(k, sizes, 1.0, 1.0, 0.1);
    EXPECT_GT(beta, beta_prev);
    EXPECT_GT(gamma, gamma_prev);
    beta_prev = beta;
    gamma_prev = gamma;
  }
  EXPECT_THROW(beta_k(1.0, sizes, 0.0, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(beta_k(1.0, sizes, 1.0, 1.0, 1.5), std::invalid_argument);
}

TEST(ConfidenceRadii, LocalRadiusFormula) {
  const double gamma = 3.0, kappa = 5.0, lambda = 2.0, h_alpha = 1.75;
  EXPECT_NEAR(local_feature_radius(0.0, lambda, gamma, kappa, h_alpha), gamma * std::sqrt(kappa / lambda),
              1e-12);
  EXPECT_NEAR(local_feature_radius(10.0, lambda, gamma, kappa, h_alpha),
              2.0 * gamma * std::sqrt(kappa * h_alpha) / std::sqrt(10.0 + 4.0 * lambda * h_alpha), 1e-12);
  EXPECT_NEAR(local_feature_radius(10.0, lambda, gamma, kappa, h_alpha, RadiusForm::kMainText),
              2.0 * std::sqrt(kappa) * gamma / std::sqrt(10.0 + 4.0 * lambda), 1e-12);
  for (double n = 100.0 * lambda * h_alpha; n < 1e6; n *= 3.0) {
    const double ratio = local_feature_radius(4.0 * n, lambda, gamma, kappa, h_alpha) /
                         local_feature_radius(n, lambda, gamma, kappa, h_alpha);
    EXPECT_GE(ratio, 0.45);
    EXPECT_LE(ratio, 0.55);
  }
  EXPECT_THROW(local_feature_radius(-1.0, lambda, gamma, kappa, h_alpha), std::invalid_argument);
}

TEST(Intervals, ZeroRadiiCollapseToTheEstimate) {
  const LogisticDcmdp env = testing::random_env(4, 2, 2, 2, 4, 0.6);
  const std::vector<double> radii(env.latent_features.num_cells(), 0.0);
  const Trajectory t = rollout_episode(env, PolicyFn(mixed_policy), 2);
  for (int h = 0; h <= 4; ++h) {
    const History prefix(t.steps.data(), h);
    const AggregatedInterval ci = aggregate_interval(prefix, env.latent_features, radii, 0.6);
    const Eigen::VectorXd sigma = sufficient_statistic(prefix, env.latent_features, 0.6);
    EXPECT_LT((ci.lower - sigma).norm(), 1e-14);
    EXPECT_LT((ci.upper - sigma).norm(), 1e-14);
  }
  const AggregatedInterval empty = aggregate_interval({}, env.latent_features, radii, 0.6);
  EXPECT_EQ(empty.lower.norm(), 0.0);
  EXPECT_EQ(empty.upper.norm(), 0.0);
}

TEST(Intervals, IncrementalAndBatchFormsAgree) {
  const LogisticDcmdp env = testing::random_env(5, 2, 2, 2, 5, 0.8);
  Rng rng(1);
  std::vector<double> radii(env.latent_features.num_cells());
  for (double& r : radii) r = rng.uniform(0.0, 0.3);
  const FeatureIntervals cells =
      feature_intervals(env.latent_features, radii, env.feature_bounds, false);
  const Trajectory t = rollout_episode(env, PolicyFn(mixed_policy), 4);
  AggregatedInterval ci = AggregatedInterval::zero(2);
  for (int h = 0; h < 5; ++h) {
    advance_interval(ci, cells, 0.8, h, t.steps[h]);
    EXPECT_TRUE((ci.lower.array() <= ci.upper.array()).all());
    const AggregatedInterval batch =
        aggregate_interval(History(t.steps.data(), h + 1), env.latent_features, radii, 0.8);
    EXPECT_LT((ci.lower - batch.lower).norm(), 1e-12);
    EXPECT_LT((ci.upper - batch.upper).norm(), 1e-12);
  }
}

TEST(Intervals, TrueStatisticInsideWheneverCellBoundsHold) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const LogisticDcmdp env = testing::random_env(seed, 2, 2, 2, 4, 0.7);
    Rng rng(seed + 100);
    // A perturbed estimate with radii that cover the perturbation.
    FeatureTable f_hat = env.latent_features;
    std::vector<double> radii(f_hat.num_cells());
    for (std::size_t cell = 0; cell < radii.size(); ++cell) {
      radii[cell] = rng.uniform(0.0, 0.5);
      for (int i = 0; i < 2; ++i) f_hat.values()[cell * 2 + i] += rng.uniform(-radii[cell], radii[cell]);
    }
    const FeatureIntervals cells = feature_intervals(f_hat, radii, env.feature_bounds, true);
    const Trajectory t = rollout_episode(env, PolicyFn(mixed_policy), seed);
    AggregatedInterval ci = AggregatedInterval::zero(2);
    for (int h = 0; h < 4; ++h) {
      advance_interval(ci, cells, 0.7, h, t.steps[h]);
      const Eigen::VectorXd sigma =
          sufficient_statistic(History(t.steps.data(), h + 1), env.latent_features, 0.7);
      EXPECT_TRUE(ci.contains(sigma, 1e-12));
    }
  }
}

TEST(Intervals, ClippingKeepsCellsInsideTheBox) {
  const LogisticDcmdp env = testing::random_env(6, 2, 2, 1, 2, 0.5, 1.0);
  const std::vector<double> radii(env.latent_features.num_cells(), 5.0);
  const FeatureIntervals clipped = feature_intervals(env.latent_features, radii, env.feature_bounds, true);
  for (double v : clipped.lower.values()) EXPECT_EQ(v, -1.0);
  for (double v : clipped.upper.values()) EXPECT_EQ(v, 1.0);
  const std::vector<double> negative(env.latent_features.num_cells(), -1.0);
  EXPECT_THROW(feature_intervals(env.latent_features, negative, env.feature_bounds, true),
               std::invalid_argument);
}

}  // namespace
}  // namespace ldc
