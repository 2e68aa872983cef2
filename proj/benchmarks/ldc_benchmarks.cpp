#include "ldc/gen_env.hpp"
#include "ldc/likelihood.hpp"
#include "ldc/planning.hpp"
#include "ldc/rng.hpp"
#include "ldc/simulate.hpp"

#include <benchmark/benchmark.h>

namespace {

ldc::AggregatedInterval random_box(int m, ldc::Rng& rng) {
  ldc::AggregatedInterval box{Eigen::VectorXd(m), Eigen::VectorXd(m)};
  for (int i = 0; i < m; ++i) {
    const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
    box.lower[i] = std::min(a, b);
    box.upper[i] = std::max(a, b);
  }
  return box;
}

void BM_OptimisticCombine(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  ldc::Rng rng(7);
  const auto box = random_box(m, rng);
  Eigen::VectorXd q(m + 1);
  for (int i = 0; i <= m; ++i) q[i] = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(ldc::optimistic_combine(q, box, 1.0).value);
}
BENCHMARK(BM_OptimisticCombine)->DenseRange(1, 9, 2)->Arg(16);

void BM_BruteForceCorners(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  ldc::Rng rng(7);
  const auto box = random_box(m, rng);
  Eigen::VectorXd q(m + 1);
  for (int i = 0; i <= m; ++i) q[i] = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(ldc::brute_force_extreme_max(q, box, 1.0));
}
BENCHMARK(BM_BruteForceCorners)->DenseRange(1, 9, 2)->Arg(16);

ldc::LogisticDcmdp small_env(int horizon) {
  return ldc::generate_env({{"family", "random-logistic"}, {"num_states", 3}, {"num_actions", 2},
                            {"num_free_contexts", 2}, {"horizon", horizon}, {"alpha", 0.7},
                            {"seed", 11}});
}

void BM_QuantizedPlanner(benchmark::State& state) {
  const auto env = small_env(static_cast<int>(state.range(0)));
  ldc::PlannerModel model;
  model.num_states = env.num_states;
  model.num_actions = env.num_actions;
  model.num_free_contexts = env.num_free_contexts;
  model.horizon = env.horizon;
  model.alpha = env.history_discount;
  model.eta = env.temperature;
  const ldc::CellLayout cells = model.layout();
  model.rewards.resize(cells.size());
  model.transitions.resize(cells.size() * env.num_states);
  for (int h = 0; h < env.horizon; ++h)
    for (int s = 0; s < env.num_states; ++s)
      for (int a = 0; a < env.num_actions; ++a)
        for (int x = 0; x < env.num_contexts(); ++x) {
          const auto c = cells(h, s, a, x);
          model.rewards[c] = env.reward(x, s, a);
          const auto p = env.transition(x, s, a);
          std::copy(p.begin(), p.end(), model.transitions.begin() + c * env.num_states);
        }
  const std::vector<double> radii(cells.size(), 0.2);
  model.features = ldc::feature_intervals(env.latent_features, radii, env.feature_bounds, true);
  ldc::PlannerConfig config;
  config.backend = ldc::PlannerBackend::kQuantized;
  config.node_budget = 10'000'000;
  std::size_t nodes = 0;
  for (auto _ : state) {
    ldc::OptimisticPlanner planner(model, config, env.initial_state);
    benchmark::DoNotOptimize(planner.initial_value());
    nodes = planner.node_count();
  }
  state.counters["nodes"] = static_cast<double>(nodes);
}
BENCHMARK(BM_QuantizedPlanner)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_ProjectedMle(benchmark::State& state) {
  const auto env = small_env(4);
  ldc::ContextDataset data(env.num_states, env.num_actions, env.num_free_contexts, env.horizon);
  const ldc::PolicyFn policy = [](int h, int s, ldc::History) { return (h + s) % 2; };
  for (int k = 0; k < state.range(0); ++k) data.add(ldc::rollout_episode(env, policy, k));
  for (auto _ : state) {
    auto fit = ldc::fit_projected_mle(data, env.feature_bounds, 1.0, env.history_discount,
                                      env.temperature);
    benchmark::DoNotOptimize(fit.objective);
  }
}
BENCHMARK(BM_ProjectedMle)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Rollout(benchmark::State& state) {
  const auto env = ldc::generate_env({{"family", "embedding-attraction"}, {"seed", 3}});
  const ldc::PolicyFn policy = [](int h, int, ldc::History) { return h % 6; };
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ldc::rollout_episode(env, policy, seed++).episode_return);
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
