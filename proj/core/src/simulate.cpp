#include "ldc/simulate.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "format.hpp"

namespace ldc {

namespace {

void check_action(const LogisticDcmdp& env, int h, int action) {
  if (action < 0 || action >= env.num_actions) {
    std::ostringstream msg;
    msg << "policy returned invalid action " << action << " at step " << h << " (expected 0.."
        << env.num_actions - 1 << ")";
    throw std::invalid_argument(msg.str());
  }
}

template <typename ChooseAction>
Trajectory rollout_impl(const LogisticDcmdp& env, std::uint64_t seed, ChooseAction&& choose,
                        const StepObserver* observe = nullptr) {
  Rng rng(seed);
  Trajectory out;
  out.seed = seed;
  out.steps.reserve(env.horizon);
  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(env.num_free_contexts);
  int state = env.initial_state;
  for (int h = 0; h < env.horizon; ++h) {
    const int action = choose(h, state, History(out.steps), rng);
    check_action(env, h, action);
    const Eigen::VectorXd z = softmax_z(sigma, env.temperature);
    const int context = rng.categorical(z);
    const double reward = env.reward(context, state, action);
    out.steps.push_back(Step{state, action, context, reward});
    out.episode_return += reward;
    state = rng.categorical(env.transition(context, out.steps.back().state, action));
    advance_statistic(sigma, env.latent_features, env.history_discount, h, out.steps.back());
    if (observe && *observe) (*observe)(h, out.steps.back(), state);
  }
  out.final_state = state;
  return out;
}

struct Enumerator {
  const LogisticDcmdp& env;
  std::vector<Step> history;

  template <typename ActionProbs>
  double node(int h, int state, const Eigen::VectorXd& sigma, ActionProbs&& action_probs) {
    if (h == env.horizon) return 0.0;
    const Eigen::VectorXd z = softmax_z(sigma, env.temperature);
    std::vector<double> pa(env.num_actions, 0.0);
    action_probs(h, state, History(history), std::span<double>(pa));
    double value = 0.0;
    for (int a = 0; a < env.num_actions; ++a) {
      if (pa[a] == 0.0) continue;
      for (int x = 0; x < env.num_contexts(); ++x) {
        double q = env.reward(x, state, a);
        if (h + 1 < env.horizon) {
          const Step step{state, a, x, env.reward(x, state, a)};
          Eigen::VectorXd next = sigma;
          advance_statistic(next, env.latent_features, env.history_discount, h, step);
          history.push_back(step);
          const auto p = env.transition(x, state, a);
          for (int s2 = 0; s2 < env.num_states; ++s2) {
            if (p[s2] == 0.0) continue;
            q += p[s2] * node(h + 1, s2, next, action_probs);
          }
          history.pop_back();
        }
        value += pa[a] * z[x] * q;
      }
    }
    return value;
  }
};

MonteCarloEstimate summarize(const std::vector<double>& returns) {
  MonteCarloEstimate out;
  out.episodes = returns.size();
  if (returns.empty()) return out;
  double sum = 0.0;
  for (double r : returns) sum += r;
  out.mean = sum / returns.size();
  if (returns.size() > 1) {
    double ss = 0.0;
    for (double r : returns) ss += (r - out.mean) * (r - out.mean);
    out.standard_error = std::sqrt(ss / (returns.size() - 1) / returns.size());
  }
  return out;
}

}  // namespace

Trajectory rollout_episode(const LogisticDcmdp& env, const PolicyFn& policy, std::uint64_t seed) {
  return rollout_impl(env, seed, [&](int h, int s, History history, Rng&) {
    return policy(h, s, history);
  });
}

Trajectory rollout_episode(const LogisticDcmdp& env, const PolicyFn& policy, std::uint64_t seed,
                           const StepObserver& observe) {
  return rollout_impl(
      env, seed, [&](int h, int s, History history, Rng&) { return policy(h, s, history); },
      &observe);
}

Trajectory rollout_episode(const LogisticDcmdp& env, const MixedPolicyFn& policy,
                           std::uint64_t seed) {
  std::vector<double> probs(env.num_actions);
  return rollout_impl(env, seed, [&](int h, int s, History history, Rng& rng) {
    policy(h, s, history, probs);
    return rng.categorical(probs);
  });
}

std::uint64_t history_count(const LogisticDcmdp& env, std::uint64_t cap) {
  const std::uint64_t branching = static_cast<std::uint64_t>(env.num_states) * env.num_actions *
                                  env.num_contexts();
  std::uint64_t count = 1;
  for (int h = 0; h < env.horizon; ++h) {
    if (count > cap / branching) return cap + 1;
    count *= branching;
  }
  return count;
}

bool history_enumeration_feasible(const LogisticDcmdp& env, std::uint64_t max_histories) {
  return history_count(env, max_histories) <= max_histories;
}

double evaluate_policy_exact(const LogisticDcmdp& env, const PolicyFn& policy,
                             std::uint64_t max_histories) {
  MixedPolicyFn as_mixed = [&](int h, int s, History history, std::span<double> out) {
    const int a = policy(h, s, history);
    check_action(env, h, a);
    std::fill(out.begin(), out.end(), 0.0);
    out[a] = 1.0;
  };
  return evaluate_policy_exact(env, as_mixed, max_histories);
}

double evaluate_policy_exact(const LogisticDcmdp& env, const MixedPolicyFn& policy,
                             std::uint64_t max_histories) {
  if (!history_enumeration_feasible(env, max_histories)) {
    throw SizeLimitError(
        "evaluate_policy_exact: history tree exceeds the enumeration budget; use monte_carlo_value");
  }
  Enumerator enumerator{env, {}};
  enumerator.history.reserve(env.horizon);
  return enumerator.node(0, env.initial_state, Eigen::VectorXd::Zero(env.num_free_contexts),
                         policy);
}

MonteCarloEstimate monte_carlo_value(const LogisticDcmdp& env, const PolicyFn& policy,
                                     std::size_t episodes, std::uint64_t base_seed) {
  std::vector<double> returns;
  returns.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    returns.push_back(rollout_episode(env, policy, derive_seed(base_seed, i)).episode_return);
  }
  return summarize(returns);
}

MonteCarloEstimate monte_carlo_value(const LogisticDcmdp& env, const MixedPolicyFn& policy,
                                     std::size_t episodes, std::uint64_t base_seed) {
  std::vector<double> returns;
  returns.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    returns.push_back(rollout_episode(env, policy, derive_seed(base_seed, i)).episode_return);
  }
  return summarize(returns);
}

void write_trajectory_rows(std::ostream& out, std::size_t episode, const Trajectory& trajectory) {
  for (std::size_t h = 0; h < trajectory.steps.size(); ++h) {
    const Step& step = trajectory.steps[h];
    out << episode << ',' << h + 1 << ',' << step.state << ',' << step.action << ',' << step.context
        << ',' << format_double(step.reward) << '\n';
  }
}

}  // namespace ldc
