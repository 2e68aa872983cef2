#pragma once

#include "ldc/dcmdp.hpp"
#include "ldc/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace ldc {

/// One episode of experience.
struct Trajectory {
  std::vector<Step> steps;  // exactly H entries
  int final_state = 0;      // s_{H+1}
  std::uint64_t seed = 0;
  double episode_return = 0.0;
};

/// Deterministic policy: (step h, current state, history of previous steps) -> action.
using PolicyFn = std::function<int(int, int, History)>;

/// Randomized policy: writes action probabilities into the output span.
using MixedPolicyFn = std::function<void(int, int, History, std::span<double>)>;

/// Draws one episode. For each step the context is drawn first (from the
/// history-dependent softmax), then the reward is emitted, then the next
/// state is drawn; the generator is seeded with `seed` alone.
Trajectory rollout_episode(const LogisticDcmdp& env, const PolicyFn& policy, std::uint64_t seed);

/// Called after each step with the step index, the step and the next state.
using StepObserver = std::function<void(int, const Step&, int)>;

/// Same as above, reporting every step to `observe` as it happens.
Trajectory rollout_episode(const LogisticDcmdp& env, const PolicyFn& policy, std::uint64_t seed,
                           const StepObserver& observe);

/// Same, with actions sampled from a randomized policy using the episode generator.
Trajectory rollout_episode(const LogisticDcmdp& env, const MixedPolicyFn& policy,
                           std::uint64_t seed);

inline constexpr std::uint64_t kDefaultHistoryBudget = 1'000'000;

/// Exact V_1^pi(s_1) by enumerating every history with its probability.
/// Throws SizeLimitError when (S*A*(M+1))^H exceeds max_histories.
double evaluate_policy_exact(const LogisticDcmdp& env, const PolicyFn& policy,
                             std::uint64_t max_histories = kDefaultHistoryBudget);
double evaluate_policy_exact(const LogisticDcmdp& env, const MixedPolicyFn& policy,
                             std::uint64_t max_histories = kDefaultHistoryBudget);

/// True when (S*A*(M+1))^H <= max_histories.
bool history_enumeration_feasible(const LogisticDcmdp& env,
                                  std::uint64_t max_histories = kDefaultHistoryBudget);
std::uint64_t history_count(const LogisticDcmdp& env, std::uint64_t cap);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t episodes = 0;
};

/// Mean return over `episodes` rollouts with seeds derive_seed(base_seed, i).
MonteCarloEstimate monte_carlo_value(const LogisticDcmdp& env, const PolicyFn& policy,
                                     std::size_t episodes, std::uint64_t base_seed);
MonteCarloEstimate monte_carlo_value(const LogisticDcmdp& env, const MixedPolicyFn& policy,
                                     std::size_t episodes, std::uint64_t base_seed);

/// Appends rows `episode,h,s,a,x,r` (no header) for one trajectory; h counts from 1.
void write_trajectory_rows(std::ostream& out, std::size_t episode, const Trajectory& trajectory);
inline constexpr const char* kTrajectoryCsvHeader = "episode,h,s,a,x,r";

}  // namespace ldc
