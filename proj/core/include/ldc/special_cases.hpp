#pragma once

#include "ldc/dcmdp.hpp"

#include <cstdint>
#include <vector>

namespace ldc {

/// Finite-horizon tabular MDP with stationary tables and an initial
/// distribution over states.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<double> rewards;      // [S][A]
  std::vector<double> transitions;  // [S][A][S]
  std::vector<double> initial_distribution;  // [S]

  double reward(int s, int a) const { return rewards[static_cast<std::size_t>(s) * num_actions + a]; }
  std::span<const double> transition(int s, int a) const {
    return {transitions.data() + (static_cast<std::size_t>(s) * num_actions + a) * num_states,
            static_cast<std::size_t>(num_states)};
  }
  void validate() const;
};

/// Optimal finite-horizon values: values[h][s] for h = 0..H (values[H] = 0)
/// and the greedy policy (lowest action index on ties).
struct TabularSolution {
  std::vector<std::vector<double>> values;
  std::vector<std::vector<int>> policy;
  double initial_value = 0.0;
};

TabularSolution value_iteration(const TabularMdp& mdp);

/// DCMDP whose context follows a Markov kernel P(x' | s, a, x) of the
/// previous triple. The context of step h is revealed together with s_h,
/// matching the history ordering (x_1, s_1, a_1, ...) of this model.
struct MarkovDcmdp {
  int num_states = 0;
  int num_actions = 0;
  int num_contexts = 0;
  int horizon = 0;
  std::vector<double> rewards;         // [X][S][A]
  std::vector<double> transitions;     // [X][S][A][S]
  std::vector<double> context_kernel;  // [X][S][A][X]
  std::vector<double> initial_context; // [X]
  int initial_state = 0;

  double reward(int x, int s, int a) const {
    return rewards[(static_cast<std::size_t>(x) * num_states + s) * num_actions + a];
  }
  std::span<const double> transition(int x, int s, int a) const {
    return {transitions.data() +
                ((static_cast<std::size_t>(x) * num_states + s) * num_actions + a) * num_states,
            static_cast<std::size_t>(num_states)};
  }
  std::span<const double> next_context(int x, int s, int a) const {
    return {context_kernel.data() +
                ((static_cast<std::size_t>(x) * num_states + s) * num_actions + a) * num_contexts,
            static_cast<std::size_t>(num_contexts)};
  }
  void validate() const;
};

/// Augmented MDP over S x X: r(s,x,a) = r(s,a,x) and
/// P((s',x') | (s,x), a) = P(s' | s,a,x) P(x' | s,a,x). Augmented state
/// index is s * X + x.
TabularMdp make_markov_augmented(const MarkovDcmdp& markov);

/// Tabular MDP over (s, previous context) for a logistic DCMDP with alpha = 0
/// whose features depend on the context only, f_h(s, a, x) = g(x). Contexts
/// are drawn after the action, so the reward and next-state kernel average
/// over the current context: r((s,y), a) = sum_x z_x(g(y)) r(s,a,x) and
/// P((s',x) | (s,y), a) = z_x(g(y)) P(s' | s,a,x). Slot y = M+1 marks the
/// first step (sigma = 0). State index is s * (M+2) + y. Throws
/// std::invalid_argument for any other environment.
TabularMdp make_previous_context_mdp(const LogisticDcmdp& env);

/// Optimal value of a Markov DCMDP by backward induction over the full
/// history tree (no state aggregation). Throws SizeLimitError when
/// (S*A*X)^H exceeds max_histories.
double markov_history_value(const MarkovDcmdp& markov, std::uint64_t max_histories = 1'000'000);

/// Terminating MDP as a logistic DCMDP: context 0 terminates (moves to an
/// absorbing zero-reward sink, index S), context 1 continues. Termination at
/// step h has probability z_0(sum_{t<h} c_t(s_t, a_t)). costs is [H][S][A].
LogisticDcmdp make_termdp(const TabularMdp& base, const std::vector<double>& costs,
                          double temperature = 1.0, int initial_state = 0);

/// Closed-form survival P(s_h != sink) for h = 0..H along a fixed sequence of
/// per-step costs (single state and action): prod_{t<h} (1 - z_0(sum_{u<t} c_u)).
std::vector<double> termdp_survival(std::span<const double> step_costs, double temperature);

/// Rescorla-Wagner recommender. Actions are items with dispositions
/// u in {-1,0,1}; feature beta * u_a; context 0 means the user answers.
/// States: 0..2 = last answer u+1, 3 = no answer yet / declined.
LogisticDcmdp make_rw_recommender(const std::vector<int>& dispositions, double beta, double alpha,
                                  int horizon, double temperature = 1.0);

inline constexpr int kRwNoAnswerState = 3;

struct KappaEstimate {
  double kappa = 0.0;
  double min_eigenvalue = 0.0;
  bool corners_enumerated = false;
  std::size_t points_evaluated = 0;
};

/// lambda_min of diag(z) - z z^T over the free softmax coordinates at sigma.
double softmax_covariance_min_eigenvalue(const Eigen::Ref<const Eigen::VectorXd>& sigma,
                                         double eta);

/// kappa over the box [-half_width, half_width]^M: the box corners (when
/// M <= 20) plus num_samples uniform points, all from a seeded stream so that
/// a larger sample budget evaluates a superset of points.
KappaEstimate estimate_kappa_in_box(int num_free_contexts, double eta, double half_width,
                                    std::size_t num_samples, std::uint64_t seed);

/// kappa over the reachable statistic box of an environment.
KappaEstimate estimate_kappa(const LogisticDcmdp& env, std::size_t num_samples,
                             std::uint64_t seed);

}  // namespace ldc
