#pragma once

#include "ldc/dcmdp.hpp"
#include "ldc/simulate.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace ldc {

/// Flat index of a per-cell quantity laid out as [H][S][A][M+1].
struct CellLayout {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  int num_contexts = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(horizon) * num_states * num_actions * num_contexts;
  }
  std::size_t operator()(int h, int s, int a, int x) const {
    return ((static_cast<std::size_t>(h) * num_states + s) * num_actions + a) * num_contexts + x;
  }
};

/// Visit counts and empirical rewards/transitions per (h, s, a, x).
class EmpiricalModel {
 public:
  EmpiricalModel() = default;
  EmpiricalModel(int num_states, int num_actions, int num_free_contexts, int horizon);

  const CellLayout& layout() const { return layout_; }
  int num_states() const { return layout_.num_states; }
  int num_actions() const { return layout_.num_actions; }
  int num_contexts() const { return layout_.num_contexts; }
  int horizon() const { return layout_.horizon; }
  std::size_t episodes() const { return episodes_; }

  /// Adds one episode; throws std::invalid_argument on a dimension mismatch.
  void update(const Trajectory& trajectory);

  std::int64_t count(int h, int s, int a, int x) const { return counts_[layout_(h, s, a, x)]; }
  double reward_sum(int h, int s, int a, int x) const { return reward_sums_[layout_(h, s, a, x)]; }
  std::int64_t transition_count(int h, int s, int a, int x, int next) const {
    return transition_counts_[layout_(h, s, a, x) * layout_.num_states + next];
  }

  /// reward_sum / max(n, 1).
  double mean_reward(int h, int s, int a, int x) const;
  /// Empirical next-state distribution; uniform for an unvisited cell.
  void transition_estimate(int h, int s, int a, int x, std::span<double> out) const;

  const std::vector<std::int64_t>& counts() const { return counts_; }

 private:
  CellLayout layout_;
  std::size_t episodes_ = 0;
  std::vector<std::int64_t> counts_;
  std::vector<double> reward_sums_;
  std::vector<std::int64_t> transition_counts_;
};

/// Sizes entering the logarithmic factor log(8 S A M H K / delta).
struct BonusSizes {
  int num_states = 1;
  int num_actions = 1;
  int num_free_contexts = 1;
  int horizon = 1;
  std::int64_t num_episodes = 1;
};

/// min{ sqrt(log(8SAMHK/delta) / max(n,1)), 1 }.
double reward_bonus(std::int64_t n, const BonusSizes& sizes, double delta);
/// min{ H sqrt(4 S log(8SAMHK/delta) / max(n,1)), 2H }.
double transition_bonus(std::int64_t n, const BonusSizes& sizes, double delta);

struct RadiusSizes {
  int num_states = 1;
  int num_actions = 1;
  int num_free_contexts = 1;
  int horizon = 1;
};

enum class GammaVariant {
  kAppendix,  // (2 + 2L + sqrt(2(1+L))) beta + sqrt(2(1+L)HM/lambda) beta^2
  kMainText,  // 2L replaced by 2L sqrt(MH)
};

/// beta_k = (M^{3/2}(M+1)SAH / sqrt(lambda)) (log(1 + k/((M+1)SA lambda)) + 2 log(2/delta))
///          + sqrt(lambda/(4M)) + sqrt(lambda) L.
double beta_k(double k, const RadiusSizes& sizes, double lambda, double norm_bound, double delta);
double gamma_k(double k, const RadiusSizes& sizes, double lambda, double norm_bound, double delta,
               GammaVariant variant = GammaVariant::kAppendix);

enum class RadiusForm {
  kAppendix,  // 2 gamma sqrt(kappa H_alpha) / sqrt(n + 4 lambda H_alpha)
  kMainText,  // 2 sqrt(kappa) gamma / sqrt(n + 4 lambda)
};

double local_feature_radius(double n, double lambda, double gamma, double kappa, double h_alpha,
                            RadiusForm form = RadiusForm::kAppendix);

struct ConfidenceScalars {
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double norm_bound = 0.0;
  double kappa = 0.0;
};

/// Interval [lower, upper] of the sufficient statistic, componentwise.
struct AggregatedInterval {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static AggregatedInterval zero(int dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
  }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& sigma, double tol = 0.0) const;
};

/// Per-cell feature box [lower, upper] used to grow aggregated intervals.
struct FeatureIntervals {
  FeatureTable lower;
  FeatureTable upper;
};

/// [f_hat - r, f_hat + r] per cell with r = radii[cell]; intersected with the
/// feature box [-b, b] when clip_to_box is set.
FeatureIntervals feature_intervals(const FeatureTable& f_hat, std::span<const double> radii,
                                   std::span<const double> feature_bounds, bool clip_to_box);

/// ci_{h+1} = alpha ci_h + [lower, upper] of the cell visited at step h.
void advance_interval(AggregatedInterval& ci, const FeatureIntervals& cells, double alpha, int h,
                      const Step& step);

/// Batch form: lower = sum alpha^{h-t-1}(f_hat_t - r_t), upper likewise with +.
AggregatedInterval aggregate_interval(History history, const FeatureTable& f_hat,
                                      std::span<const double> radii, double alpha);

}  // namespace ldc
