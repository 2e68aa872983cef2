#pragma once

#include "ldc/dcmdp.hpp"
#include "ldc/estimation.hpp"
#include "ldc/likelihood.hpp"
#include "ldc/oracles.hpp"
#include "ldc/planning.hpp"
#include "ldc/rng.hpp"
#include "ldc/simulate.hpp"

#include <nlohmann/json.hpp>

#include <limits>
#include <memory>
#include <optional>
#include <string>

namespace ldc {

/// Episode loop contract shared by all agents:
/// begin_episode(k), then act/observe for h = 0..H-1, then end_episode.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string type() const = 0;
  virtual void begin_episode(std::size_t k) = 0;
  virtual int act(int h, int state, History history) = 0;
  virtual void observe(int /*h*/, const Step& /*step*/, int /*next_state*/) {}
  virtual void end_episode(const Trajectory& trajectory) = 0;

  /// The policy deployed in the current episode, as a pure function of the
  /// history. Used for exact or Monte-Carlo evaluation; never feeds learning.
  virtual MixedPolicyFn current_policy() = 0;

  /// Value the agent planned for the current episode (NaN when not applicable).
  virtual double planned_value() const { return std::numeric_limits<double>::quiet_NaN(); }
};

/// Structural knowledge every learner starts from: sizes, discount,
/// temperature, feature box, L and the initial state. The true rewards,
/// transitions and features are not read.
struct ProblemShape {
  int num_states = 0;
  int num_actions = 0;
  int num_free_contexts = 0;
  int horizon = 0;
  double alpha = 1.0;
  double eta = 1.0;
  std::vector<double> feature_bounds;  // [H][M]
  double norm_bound = 0.0;
  int initial_state = 0;

  static ProblemShape of(const LogisticDcmdp& env);
};

struct LdcUcbConfig {
  double lambda = 1.0;
  double delta = 0.1;
  double bonus_scale = 1.0;
  double radius_scale = 1.0;
  bool paper_delta_split = true;  // radii at delta/4; bonuses already carry 8/delta
  GammaVariant gamma_variant = GammaVariant::kAppendix;
  RadiusForm radius_form = RadiusForm::kAppendix;
  double kappa = 0.0;  // 0: estimate over the reachable box
  std::size_t kappa_samples = 1000;
  int refit_every = 1;
  bool clip_to_box = true;
  std::int64_t num_episodes = 1;  // K in the bonus logarithm
  FitConfig fit;
  PlannerConfig planner;
  std::optional<FeatureTable> frozen_features;  // skip fitting and use these
};

/// Tractable LDC-UCB: optimistic rewards r_hat + b, the threshold-optimistic
/// planner over aggregated intervals, projected MLE refits after each episode.
class LdcUcbAgent : public Agent {
 public:
  LdcUcbAgent(ProblemShape shape, LdcUcbConfig config, std::string type = "ldc_ucb");

  std::string type() const override { return type_; }
  void begin_episode(std::size_t k) override;
  int act(int h, int state, History history) override;
  void end_episode(const Trajectory& trajectory) override;
  MixedPolicyFn current_policy() override;
  double planned_value() const override;

  const EmpiricalModel& model() const { return model_; }
  const FeatureEstimate& estimate() const { return estimate_; }
  const ConfidenceScalars& confidence() const { return scalars_; }
  const std::vector<double>& radii() const { return radii_; }
  const PlannerModel& planner_model() const;
  OptimisticPlanner& planner();

 private:
  ProblemShape shape_;
  LdcUcbConfig config_;
  std::string type_;
  EmpiricalModel model_;
  ContextDataset data_;
  FeatureEstimate estimate_;
  ConfidenceScalars scalars_;
  std::vector<double> radii_;
  std::shared_ptr<OptimisticPlanner> planner_;
  AggregatedInterval ci_;
  std::size_t episode_ = 0;
};

/// Optimistic value iteration on the augmented state (s, previous context)
/// with a Hoeffding bonus scale * H sqrt(2 log(3 S' A H K / delta) / max(n, 1)),
/// S' = S (M+2). The extra context slot marks the first step.
class UcbviAgent : public Agent {
 public:
  UcbviAgent(ProblemShape shape, double bonus_scale, double delta, std::int64_t num_episodes);

  std::string type() const override { return "ucbvi"; }
  void begin_episode(std::size_t k) override;
  int act(int h, int state, History history) override;
  void end_episode(const Trajectory& trajectory) override;
  MixedPolicyFn current_policy() override;
  double planned_value() const override { return planned_value_; }

 private:
  ProblemShape shape_;
  double bonus_scale_;
  double delta_;
  std::int64_t num_episodes_;
  int num_aug_;
  std::vector<std::int64_t> counts_;             // [H][S'][A]
  std::vector<double> reward_sums_;              // [H][S'][A]
  std::vector<std::int64_t> transition_counts_;  // [H][S'][A][S']
  std::shared_ptr<std::vector<int>> policy_;     // [H][S']
  double planned_value_ = 0.0;

  int augmented(int h, int state, History history) const;
};

/// Plays pi* from the history DP (or the sigma DP when the history tree is too large).
class OracleAgent : public Agent {
 public:
  explicit OracleAgent(const LogisticDcmdp& env);

  std::string type() const override { return "oracle"; }
  void begin_episode(std::size_t) override {}
  int act(int h, int state, History history) override;
  void end_episode(const Trajectory&) override {}
  MixedPolicyFn current_policy() override;
  double planned_value() const override { return value_; }

 private:
  std::shared_ptr<HistoryPolicy> history_policy_;
  std::shared_ptr<SigmaDp> sigma_dp_;
  const LogisticDcmdp* env_;
  double value_ = 0.0;
};

class RandomAgent : public Agent {
 public:
  RandomAgent(int num_actions, std::uint64_t seed);

  std::string type() const override { return "random"; }
  void begin_episode(std::size_t) override {}
  int act(int h, int state, History history) override;
  void end_episode(const Trajectory&) override {}
  MixedPolicyFn current_policy() override;

 private:
  int num_actions_;
  Rng rng_;
};

/// Settings an experiment applies to every agent unless the agent's own
/// document overrides them.
struct AgentDefaults {
  double bonus_scale = 1.0;
  std::optional<double> radius_scale;  // unset: follow the bonus scale
  double delta = 0.1;
  std::int64_t num_episodes = 1;
  PlannerConfig planner;
};

/// Builds an agent from {"type": ldc_ucb | ucbvi | oracle | random | greedy, ...}.
/// Throws std::invalid_argument on unknown types or fields of the wrong kind.
std::unique_ptr<Agent> make_agent(const nlohmann::json& spec, const LogisticDcmdp& env,
                                  std::uint64_t seed, const AgentDefaults& defaults);

/// Display name: the "name" field when present, otherwise the type.
std::string agent_name(const nlohmann::json& spec);

PlannerBackend parse_planner_backend(const std::string& name);

}  // namespace ldc
