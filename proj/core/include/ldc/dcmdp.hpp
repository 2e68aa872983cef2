#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldc {

/// Raised when an exhaustive routine would exceed its enumeration budget.
class SizeLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One (state, action, context) triple of a history, plus the reward that
/// was collected at that step. Steps are indexed from 0.
struct Step {
  int state = 0;
  int action = 0;
  int context = 0;
  double reward = 0.0;
};

using History = std::span<const Step>;

/// Dense table of latent feature vectors f_h(s, a, x) in R^M, laid out as
/// [H][S][A][M+1][M].
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(int horizon, int num_states, int num_actions, int num_free_contexts);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int num_free_contexts() const { return dim_; }
  int num_contexts() const { return dim_ + 1; }
  std::size_t num_cells() const;

  std::size_t offset(int h, int s, int a, int x) const;

  Eigen::Map<const Eigen::VectorXd> cell(int h, int s, int a, int x) const {
    return {values_.data() + offset(h, s, a, x), dim_};
  }
  Eigen::Map<Eigen::VectorXd> cell(int h, int s, int a, int x) {
    return {values_.data() + offset(h, s, a, x), dim_};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const FeatureTable& other) const;

 private:
  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  int dim_ = 0;
  std::vector<double> values_;
};

/// Logistic DCMDP: per-context rewards and transitions, with the context of
/// each step drawn from a softmax of the discounted sum of latent features
/// collected along the history.
struct LogisticDcmdp {
  int num_states = 0;
  int num_actions = 0;
  int num_free_contexts = 0;
  int horizon = 0;
  std::vector<double> rewards;      // [M+1][S][A]
  std::vector<double> transitions;  // [M+1][S][A][S]
  FeatureTable latent_features;     // [H][S][A][M+1] -> R^M
  double history_discount = 1.0;
  double temperature = 1.0;
  std::vector<double> feature_bounds;  // [H][M]
  double feature_norm_bound = 0.0;     // L; 0 means "derive from latent_features"
  int initial_state = 0;

  int num_contexts() const { return num_free_contexts + 1; }

  double reward(int x, int s, int a) const {
    return rewards[(static_cast<std::size_t>(x) * num_states + s) * num_actions + a];
  }
  double& reward(int x, int s, int a) {
    return rewards[(static_cast<std::size_t>(x) * num_states + s) * num_actions + a];
  }
  std::span<const double> transition(int x, int s, int a) const {
    return {transitions.data() + ((static_cast<std::size_t>(x) * num_states + s) * num_actions + a) *
                                     num_states,
            static_cast<std::size_t>(num_states)};
  }
  std::span<double> transition(int x, int s, int a) {
    return {transitions.data() + ((static_cast<std::size_t>(x) * num_states + s) * num_actions + a) *
                                     num_states,
            static_cast<std::size_t>(num_states)};
  }
  double feature_bound(int h, int i) const {
    return feature_bounds[static_cast<std::size_t>(h) * num_free_contexts + i];
  }
  double max_feature_bound() const;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

/// Allocates all tables of an environment with the given sizes, zero-filled,
/// with uniform transitions and a temperature of H_alpha^{-1/2}.
LogisticDcmdp make_empty_dcmdp(int num_states, int num_actions, int num_free_contexts, int horizon,
                               double history_discount);

/// Effective history horizon (1 - alpha^{2H}) / (1 - alpha); 2H at alpha = 1.
double history_discount_horizon(double alpha, int horizon);

/// Default temperature H_alpha^{-1/2}.
double default_temperature(double alpha, int horizon);

/// Softmax over M free coordinates plus a reference class pinned at 0.
/// Returns M+1 probabilities; the last entry is the reference class.
Eigen::VectorXd softmax_z(const Eigen::Ref<const Eigen::VectorXd>& u, double eta);

/// log z_i(u) for every class, computed without forming z.
Eigen::VectorXd log_softmax_z(const Eigen::Ref<const Eigen::VectorXd>& u, double eta);

/// sigma(tau_h; f) = sum_t alpha^{h-t-1} f_t(s_t, a_t, x_t). Step t of the
/// history uses feature slice t.
Eigen::VectorXd sufficient_statistic(History history, const FeatureTable& features, double alpha);

/// sigma_{h+1} = alpha * sigma_h + f_h(s_h, a_h, x_h).
void advance_statistic(Eigen::VectorXd& sigma, const FeatureTable& features, double alpha,
                       int h, const Step& step);

/// Context distribution P(x_h | tau_h) of a logistic DCMDP.
Eigen::VectorXd context_distribution(const LogisticDcmdp& env, History history);

/// Largest reachable |sigma_i|: b_max (1 - alpha^H) / (1 - alpha), or b_max H at alpha = 1.
double reachable_statistic_radius(double max_bound, double alpha, int horizon);

}  // namespace ldc
