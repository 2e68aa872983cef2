#pragma once

#include "ldc/dcmdp.hpp"
#include "ldc/estimation.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <vector>

namespace ldc {

/// Midpoints of adjacent distinct values of sorted Q, ascending.
std::vector<double> threshold_set(const Eigen::Ref<const Eigen::VectorXd>& q);

/// Corner of the interval selected by threshold t: coordinate i takes lower_i
/// when Q_i < t and upper_i otherwise. Q has M+1 entries; the last is the
/// reference class and is not part of the corner.
Eigen::VectorXd apply_threshold(double t, const Eigen::Ref<const Eigen::VectorXd>& q,
                                const AggregatedInterval& interval);

struct OptimisticChoice {
  double value = 0.0;
  Eigen::VectorXd sigma;
  double threshold = 0.0;  // +-infinity for the all-lower / all-upper corners
};

/// max over sigma in the interval of sum_i z_i(sigma) Q_i, searched over the
/// threshold corners plus the all-upper and all-lower corners.
OptimisticChoice optimistic_combine(const Eigen::Ref<const Eigen::VectorXd>& q,
                                    const AggregatedInterval& interval, double eta);

/// Same maximum by enumerating all 2^M corners. Throws SizeLimitError for M > 20.
double brute_force_extreme_max(const Eigen::Ref<const Eigen::VectorXd>& q,
                               const AggregatedInterval& interval, double eta);

/// Estimated model handed to the optimistic planner.
struct PlannerModel {
  int num_states = 0;
  int num_actions = 0;
  int num_free_contexts = 0;
  int horizon = 0;
  double alpha = 1.0;
  double eta = 1.0;
  std::vector<double> rewards;      // optimistic r_bar, [H][S][A][M+1]
  std::vector<double> transitions;  // P_hat, [H][S][A][M+1][S]
  FeatureIntervals features;
  double value_cap = 0.0;  // 0 means H

  CellLayout layout() const { return {horizon, num_states, num_actions, num_free_contexts + 1}; }
  void validate() const;
};

enum class PlannerBackend { kExact, kQuantized };

struct PlannerConfig {
  PlannerBackend backend = PlannerBackend::kExact;
  double epsilon = 0.0;  // quantized grid width; 0 means 0.05 * max feature bound
  std::size_t node_budget = 200'000;
  bool record_trace = false;
};

struct PlanNode {
  int h = 0;
  int state = 0;
  AggregatedInterval interval;
  double value = 0.0;
  int action = 0;
  double threshold = 0.0;
};

/// Optimistic dynamic program over (h, s, ci): V(h, s, ci) is the truncated
/// maximum over actions and threshold corners of sum_i z_i Q_i with
/// Q_i = r_bar_i + sum_s' P_hat_i(s') V(h+1, s', alpha ci + [lower, upper]_i).
/// Nodes are memoized on their interval, rounded to 1e-12 (exact backend) or
/// snapped outward to the epsilon grid (quantized backend). Nodes off the
/// planned tree are solved on first use.
class OptimisticPlanner {
 public:
  OptimisticPlanner(PlannerModel model, PlannerConfig config, int initial_state);

  double initial_value() const { return initial_value_; }

  /// Optimistic action at (h, s, ci).
  int act(int h, int state, const AggregatedInterval& ci);
  double value(int h, int state, const AggregatedInterval& ci);

  /// Next interval after visiting (h, s, a, x) from ci, snapped like the planner's nodes.
  AggregatedInterval advance(const AggregatedInterval& ci, int h, int state, int action,
                             int context) const;
  AggregatedInterval initial_interval() const;

  std::size_t node_count() const;
  nlohmann::json trace_json() const;
  const PlannerModel& model() const { return model_; }
  const PlannerConfig& config() const { return config_; }

 private:
  struct Impl;
  PlannerModel model_;
  PlannerConfig config_;
  double epsilon_ = 0.0;
  int initial_state_ = 0;
  double initial_value_ = 0.0;
  std::shared_ptr<Impl> impl_;

  const PlanNode& solve(int h, int state, const AggregatedInterval& ci);
};

}  // namespace ldc
