#pragma once

#include "ldc/dcmdp.hpp"
#include "ldc/estimation.hpp"
#include "ldc/simulate.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <vector>

namespace ldc {

/// Observed (s, a, x) sequences, deduplicated with multiplicities. Rewards do
/// not enter the likelihood and are dropped.
class ContextDataset {
 public:
  struct Sequence {
    std::vector<Step> steps;
    double weight = 0.0;
  };

  ContextDataset() = default;
  ContextDataset(int num_states, int num_actions, int num_free_contexts, int horizon);

  void add(const Trajectory& trajectory, double weight = 1.0);
  void add(History steps, double weight = 1.0);

  const std::vector<Sequence>& sequences() const { return sequences_; }
  double total_weight() const { return total_weight_; }
  bool empty() const { return sequences_.empty(); }

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int num_free_contexts() const { return num_free_contexts_; }
  int horizon() const { return horizon_; }

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  int num_free_contexts_ = 0;
  int horizon_ = 0;
  std::vector<Sequence> sequences_;
  std::map<std::vector<int>, std::size_t> index_;
  double total_weight_ = 0.0;
};

/// sum over episodes and steps of log z_{x_h}(sigma(tau_h; f)) - lambda ||f||^2.
/// Every observed context counts, including the first (whose prediction is
/// uniform and does not depend on f).
double log_likelihood(const ContextDataset& data, const FeatureTable& features, double lambda,
                      double alpha, double eta);

/// Same objective plus its gradient, written into `gradient` (resized to f's shape).
double log_likelihood_gradient(const ContextDataset& data, const FeatureTable& features,
                               double lambda, double alpha, double eta, FeatureTable& gradient);

struct FitConfig {
  double tolerance = 1e-8;  // on the sup norm of the unit-step gradient mapping
  int max_iterations = 5000;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double initial_step = 1.0;
};

struct FeatureEstimate {
  FeatureTable f_hat;
  std::vector<double> feature_bounds;  // [H][M]
  double lambda = 0.0;
  int iterations = 0;
  double gradient_mapping_norm = 0.0;
  double objective = 0.0;
  bool converged = false;
};

/// Projected gradient ascent over the box |f_h,i| <= b_h,i. The trial step of
/// each iteration is the Barzilai-Borwein step of the previous one, reduced by
/// Armijo backtracking until the objective increases sufficiently, so accepted
/// iterates never decrease the objective. The increase is certified either by
/// the objective values or, when those are dominated by rounding, by the slope
/// at the trial point (valid because the objective is concave). `warm_start` (if given) is projected
/// and used as the first iterate. Throws std::runtime_error on a non-finite
/// objective.
FeatureEstimate fit_projected_mle(const ContextDataset& data, std::span<const double> feature_bounds,
                                  double lambda, double alpha, double eta, const FitConfig& config = {},
                                  const FeatureTable* warm_start = nullptr);

/// Checkpoint document: episode, lambda, diagnostics, f_hat values and visit counts.
nlohmann::json estimate_checkpoint_json(std::size_t episode, const FeatureEstimate& estimate,
                                        const EmpiricalModel& model);

}  // namespace ldc
