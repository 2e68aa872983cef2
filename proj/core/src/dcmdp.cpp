#include "ldc/dcmdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ldc {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

FeatureTable::FeatureTable(int horizon, int num_states, int num_actions, int num_free_contexts)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      dim_(num_free_contexts) {
  require(horizon >= 0 && num_states >= 0 && num_actions >= 0 && num_free_contexts >= 0,
          "FeatureTable: negative dimension");
  values_.assign(num_cells() * static_cast<std::size_t>(dim_), 0.0);
}

std::size_t FeatureTable::num_cells() const {
  return static_cast<std::size_t>(horizon_) * num_states_ * num_actions_ * (dim_ + 1);
}

std::size_t FeatureTable::offset(int h, int s, int a, int x) const {
  if (h < 0 || h >= horizon_ || s < 0 || s >= num_states_ || a < 0 || a >= num_actions_ || x < 0 ||
      x > dim_) {
    std::ostringstream msg;
    msg << "FeatureTable: index (h=" << h << ", s=" << s << ", a=" << a << ", x=" << x
        << ") out of range";
    throw std::invalid_argument(msg.str());
  }
  return (((static_cast<std::size_t>(h) * num_states_ + s) * num_actions_ + a) * (dim_ + 1) + x) *
         dim_;
}

bool FeatureTable::same_shape(const FeatureTable& other) const {
  return horizon_ == other.horizon_ && num_states_ == other.num_states_ &&
         num_actions_ == other.num_actions_ && dim_ == other.dim_;
}

double LogisticDcmdp::max_feature_bound() const {
  double b = 0.0;
  for (double v : feature_bounds) b = std::max(b, v);
  return b;
}

void LogisticDcmdp::validate() const {
  require(num_states > 0, "num_states must be positive");
  require(num_actions > 0, "num_actions must be positive");
  require(num_free_contexts > 0, "num_free_contexts must be positive");
  require(horizon > 0, "horizon must be positive");
  const std::size_t X = num_contexts();
  require(rewards.size() == X * num_states * num_actions, "rewards has the wrong size");
  require(transitions.size() == X * num_states * num_actions * num_states,
          "transitions has the wrong size");
  require(latent_features.horizon() == horizon && latent_features.num_states() == num_states &&
              latent_features.num_actions() == num_actions &&
              latent_features.num_free_contexts() == num_free_contexts,
          "latent_features has the wrong shape");
  require(feature_bounds.size() == static_cast<std::size_t>(horizon) * num_free_contexts,
          "feature_bounds has the wrong size");
  require(std::isfinite(history_discount) && history_discount >= 0.0 && history_discount <= 1.0,
          "history_discount must lie in [0, 1]");
  require(std::isfinite(temperature) && temperature > 0.0, "temperature must be positive");
  require(initial_state >= 0 && initial_state < num_states, "initial_state out of range");
  for (double r : rewards) {
    require(std::isfinite(r) && r >= 0.0 && r <= 1.0, "reward entries must lie in [0, 1]");
  }
  for (int x = 0; x < num_contexts(); ++x) {
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        double total = 0.0;
        for (double p : transition(x, s, a)) {
          require(std::isfinite(p) && p >= 0.0, "transition entries must be nonnegative");
          total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) {
          std::ostringstream msg;
          msg << "transition row (x=" << x << ", s=" << s << ", a=" << a << ") sums to " << total;
          throw std::invalid_argument(msg.str());
        }
      }
    }
  }
  for (double b : feature_bounds) {
    require(std::isfinite(b) && b >= 0.0, "feature_bounds must be nonnegative");
  }
  double squared_norm = 0.0;
  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        for (int x = 0; x < num_contexts(); ++x) {
          const auto f = latent_features.cell(h, s, a, x);
          for (int i = 0; i < num_free_contexts; ++i) {
            require(std::isfinite(f[i]), "latent_features must be finite");
            if (std::abs(f[i]) > feature_bound(h, i) + 1e-12) {
              std::ostringstream msg;
              msg << "latent feature (h=" << h << ", s=" << s << ", a=" << a << ", x=" << x
                  << ", i=" << i << ") = " << f[i] << " exceeds its bound " << feature_bound(h, i);
              throw std::invalid_argument(msg.str());
            }
            squared_norm += f[i] * f[i];
          }
        }
      }
    }
  }
  if (feature_norm_bound > 0.0) {
    require(std::sqrt(squared_norm) <= feature_norm_bound * (1.0 + 1e-12),
            "latent_features exceed the configured norm bound L");
  }
}

LogisticDcmdp make_empty_dcmdp(int num_states, int num_actions, int num_free_contexts, int horizon,
                               double history_discount) {
  require(num_states > 0 && num_actions > 0 && num_free_contexts > 0 && horizon > 0,
          "environment sizes must be positive");
  LogisticDcmdp env;
  env.num_states = num_states;
  env.num_actions = num_actions;
  env.num_free_contexts = num_free_contexts;
  env.horizon = horizon;
  const std::size_t X = num_free_contexts + 1;
  env.rewards.assign(X * num_states * num_actions, 0.0);
  env.transitions.assign(X * num_states * num_actions * num_states, 1.0 / num_states);
  env.latent_features = FeatureTable(horizon, num_states, num_actions, num_free_contexts);
  env.history_discount = history_discount;
  env.temperature = default_temperature(history_discount, horizon);
  env.feature_bounds.assign(static_cast<std::size_t>(horizon) * num_free_contexts, 1.0);
  return env;
}

double history_discount_horizon(double alpha, int horizon) {
  if (alpha >= 1.0) return 2.0 * horizon;
  return (1.0 - std::pow(alpha, 2.0 * horizon)) / (1.0 - alpha);
}

double default_temperature(double alpha, int horizon) {
  return 1.0 / std::sqrt(history_discount_horizon(alpha, horizon));
}

Eigen::VectorXd log_softmax_z(const Eigen::Ref<const Eigen::VectorXd>& u, double eta) {
  const Eigen::Index M = u.size();
  for (Eigen::Index i = 0; i < M; ++i) {
    if (!std::isfinite(u[i])) throw std::invalid_argument("softmax_z: non-finite input");
  }
  if (!(std::isfinite(eta) && eta > 0.0)) {
    throw std::invalid_argument("softmax_z: temperature must be positive");
  }
  Eigen::VectorXd logits(M + 1);
  logits.head(M) = eta * u;
  logits[M] = 0.0;
  const double top = logits.maxCoeff();
  const double log_norm = top + std::log((logits.array() - top).exp().sum());
  return logits.array() - log_norm;
}

Eigen::VectorXd softmax_z(const Eigen::Ref<const Eigen::VectorXd>& u, double eta) {
  // The reference entry equals 1 - sum of the free entries; evaluating it from
  // its own logit keeps it strictly positive under saturation.
  return log_softmax_z(u, eta).array().exp();
}

Eigen::VectorXd sufficient_statistic(History history, const FeatureTable& features, double alpha) {
  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(features.num_free_contexts());
  for (std::size_t t = 0; t < history.size(); ++t) {
    advance_statistic(sigma, features, alpha, static_cast<int>(t), history[t]);
  }
  return sigma;
}

void advance_statistic(Eigen::VectorXd& sigma, const FeatureTable& features, double alpha, int h,
                       const Step& step) {
  sigma = alpha * sigma + features.cell(h, step.state, step.action, step.context);
}

Eigen::VectorXd context_distribution(const LogisticDcmdp& env, History history) {
  if (history.size() >= static_cast<std::size_t>(env.horizon)) {
    throw std::invalid_argument("context_distribution: history longer than horizon - 1");
  }
  return softmax_z(sufficient_statistic(history, env.latent_features, env.history_discount),
                   env.temperature);
}

double reachable_statistic_radius(double max_bound, double alpha, int horizon) {
  if (alpha >= 1.0) return max_bound * horizon;
  return max_bound * (1.0 - std::pow(alpha, horizon)) / (1.0 - alpha);
}

}  // namespace ldc
