#include "ldc/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ldc {

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
}

double bonus_log(const BonusSizes& z, double delta) {
  check_delta(delta);
  return std::log(8.0 * z.num_states * z.num_actions * z.num_free_contexts * z.horizon *
                  static_cast<double>(std::max<std::int64_t>(z.num_episodes, 1)) / delta);
}

}  // namespace

EmpiricalModel::EmpiricalModel(int num_states, int num_actions, int num_free_contexts, int horizon)
    : layout_{horizon, num_states, num_actions, num_free_contexts + 1},
      counts_(layout_.size(), 0),
      reward_sums_(layout_.size(), 0.0),
      transition_counts_(layout_.size() * num_states, 0) {
  if (num_states < 1 || num_actions < 1 || num_free_contexts < 1 || horizon < 1) {
    throw std::invalid_argument("EmpiricalModel: sizes must be positive");
  }
}

void EmpiricalModel::update(const Trajectory& trajectory) {
  if (static_cast<int>(trajectory.steps.size()) != layout_.horizon) {
    std::ostringstream msg;
    msg << "EmpiricalModel::update: trajectory has " << trajectory.steps.size()
        << " steps, model horizon is " << layout_.horizon;
    throw std::invalid_argument(msg.str());
  }
  for (int h = 0; h < layout_.horizon; ++h) {
    const Step& step = trajectory.steps[h];
    if (step.state < 0 || step.state >= layout_.num_states || step.action < 0 ||
        step.action >= layout_.num_actions || step.context < 0 ||
        step.context >= layout_.num_contexts) {
      throw std::invalid_argument("EmpiricalModel::update: step " + std::to_string(h) +
                                  " is out of range for the model dimensions");
    }
  }
  if (trajectory.final_state < 0 || trajectory.final_state >= layout_.num_states) {
    throw std::invalid_argument("EmpiricalModel::update: final state out of range");
  }
  for (int h = 0; h < layout_.horizon; ++h) {
    const Step& step = trajectory.steps[h];
    const int next = h + 1 < layout_.horizon ? trajectory.steps[h + 1].state : trajectory.final_state;
    const std::size_t cell = layout_(h, step.state, step.action, step.context);
    ++counts_[cell];
    reward_sums_[cell] += step.reward;
    ++transition_counts_[cell * layout_.num_states + next];
  }
  ++episodes_;
}

double EmpiricalModel::mean_reward(int h, int s, int a, int x) const {
  const std::size_t cell = layout_(h, s, a, x);
  return reward_sums_[cell] / static_cast<double>(std::max<std::int64_t>(counts_[cell], 1));
}

void EmpiricalModel::transition_estimate(int h, int s, int a, int x, std::span<double> out) const {
  const std::size_t cell = layout_(h, s, a, x);
  const auto n = counts_[cell];
  const int S = layout_.num_states;
  for (int next = 0; next < S; ++next) {
    out[next] = n == 0 ? 1.0 / S
                       : static_cast<double>(transition_counts_[cell * S + next]) / static_cast<double>(n);
  }
}

double reward_bonus(std::int64_t n, const BonusSizes& sizes, double delta) {
  const double value = std::sqrt(bonus_log(sizes, delta) / std::max<std::int64_t>(n, 1));
  return std::min(value, 1.0);
}

double transition_bonus(std::int64_t n, const BonusSizes& sizes, double delta) {
  const double H = sizes.horizon;
  const double value =
      H * std::sqrt(4.0 * sizes.num_states * bonus_log(sizes, delta) / std::max<std::int64_t>(n, 1));
  return std::min(value, 2.0 * H);
}

double beta_k(double k, const RadiusSizes& z, double lambda, double norm_bound, double delta) {
  check_delta(delta);
  if (!(lambda > 0.0)) throw std::invalid_argument("beta_k: lambda must be positive");
  if (k < 0.0) throw std::invalid_argument("beta_k: k must be nonnegative");
  const double M = z.num_free_contexts;
  const double d = (M + 1.0) * z.num_states * z.num_actions;
  const double lead = std::pow(M, 1.5) * d * z.horizon / std::sqrt(lambda);
  return lead * (std::log1p(k / (d * lambda)) + 2.0 * std::log(2.0 / delta)) +
         std::sqrt(lambda / (4.0 * M)) + std::sqrt(lambda) * norm_bound;
}

double gamma_k(double k, const RadiusSizes& z, double lambda, double norm_bound, double delta,
               GammaVariant variant) {
  const double beta = beta_k(k, z, lambda, norm_bound, delta);
  const double L = norm_bound;
  const double M = z.num_free_contexts, H = z.horizon;
  const double linear_l =
      variant == GammaVariant::kAppendix ? 2.0 * L : 2.0 * L * std::sqrt(M * H);
  return (2.0 + linear_l + std::sqrt(2.0 * (1.0 + L))) * beta +
         std::sqrt(2.0 * (1.0 + L) * H * M / lambda) * beta * beta;
}

double local_feature_radius(double n, double lambda, double gamma, double kappa, double h_alpha,
                            RadiusForm form) {
  if (n < 0.0) throw std::invalid_argument("local_feature_radius: n must be nonnegative");
  if (form == RadiusForm::kAppendix) {
    return 2.0 * gamma * std::sqrt(kappa * h_alpha) / std::sqrt(n + 4.0 * lambda * h_alpha);
  }
  return 2.0 * std::sqrt(kappa) * gamma / std::sqrt(n + 4.0 * lambda);
}

bool AggregatedInterval::contains(const Eigen::Ref<const Eigen::VectorXd>& sigma, double tol) const {
  return ((sigma.array() >= lower.array() - tol) && (sigma.array() <= upper.array() + tol)).all();
}

FeatureIntervals feature_intervals(const FeatureTable& f_hat, std::span<const double> radii,
                                   std::span<const double> feature_bounds, bool clip_to_box) {
  const int H = f_hat.horizon(), S = f_hat.num_states(), A = f_hat.num_actions(),
            X = f_hat.num_contexts(), M = f_hat.num_free_contexts();
  const CellLayout layout{H, S, A, X};
  if (radii.size() != layout.size()) throw std::invalid_argument("feature_intervals: radii size mismatch");
  FeatureIntervals out{FeatureTable(H, S, A, M), FeatureTable(H, S, A, M)};
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        for (int x = 0; x < X; ++x) {
          const double r = radii[layout(h, s, a, x)];
          if (r < 0.0) throw std::invalid_argument("feature_intervals: negative radius");
          const auto f = f_hat.cell(h, s, a, x);
          auto lo = out.lower.cell(h, s, a, x);
          auto hi = out.upper.cell(h, s, a, x);
          for (int i = 0; i < M; ++i) {
            lo[i] = f[i] - r;
            hi[i] = f[i] + r;
            if (clip_to_box) {
              const double b = feature_bounds[static_cast<std::size_t>(h) * M + i];
              lo[i] = std::clamp(lo[i], -b, b);
              hi[i] = std::clamp(hi[i], -b, b);
            }
          }
        }
      }
    }
  }
  return out;
}

void advance_interval(AggregatedInterval& ci, const FeatureIntervals& cells, double alpha, int h,
                      const Step& step) {
  ci.lower = alpha * ci.lower + cells.lower.cell(h, step.state, step.action, step.context);
  ci.upper = alpha * ci.upper + cells.upper.cell(h, step.state, step.action, step.context);
}

AggregatedInterval aggregate_interval(History history, const FeatureTable& f_hat,
                                      std::span<const double> radii, double alpha) {
  const int M = f_hat.num_free_contexts();
  const CellLayout layout{f_hat.horizon(), f_hat.num_states(), f_hat.num_actions(),
                          f_hat.num_contexts()};
  AggregatedInterval out = AggregatedInterval::zero(M);
  const int h = static_cast<int>(history.size());
  for (int t = 0; t < h; ++t) {
    const Step& step = history[t];
    const double weight = std::pow(alpha, h - t - 1);
    const double r = radii[layout(t, step.state, step.action, step.context)];
    if (r < 0.0) throw std::invalid_argument("aggregate_interval: negative radius");
    const auto f = f_hat.cell(t, step.state, step.action, step.context);
    out.lower += weight * (f.array() - r).matrix();
    out.upper += weight * (f.array() + r).matrix();
  }
  return out;
}

}  // namespace ldc
