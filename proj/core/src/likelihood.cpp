#include "ldc/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ldc {

ContextDataset::ContextDataset(int num_states, int num_actions, int num_free_contexts, int horizon)
    : num_states_(num_states),
      num_actions_(num_actions),
      num_free_contexts_(num_free_contexts),
      horizon_(horizon) {}

void ContextDataset::add(const Trajectory& trajectory, double weight) {
  add(History(trajectory.steps), weight);
}

void ContextDataset::add(History steps, double weight) {
  if (static_cast<int>(steps.size()) > horizon_) {
    throw std::invalid_argument("ContextDataset::add: sequence longer than the horizon");
  }
  std::vector<int> key;
  key.reserve(steps.size() * 3);
  for (const Step& step : steps) {
    if (step.state < 0 || step.state >= num_states_ || step.action < 0 ||
        step.action >= num_actions_ || step.context < 0 || step.context > num_free_contexts_) {
      throw std::invalid_argument("ContextDataset::add: step out of range");
    }
    key.insert(key.end(), {step.state, step.action, step.context});
  }
  auto [it, inserted] = index_.try_emplace(std::move(key), sequences_.size());
  if (inserted) {
    Sequence seq;
    seq.steps.reserve(steps.size());
    for (const Step& step : steps) seq.steps.push_back(Step{step.state, step.action, step.context, 0.0});
    sequences_.push_back(std::move(seq));
  }
  sequences_[it->second].weight += weight;
  total_weight_ += weight;
}

namespace {

void check_shape(const ContextDataset& data, const FeatureTable& f) {
  if (f.horizon() != data.horizon() || f.num_states() != data.num_states() ||
      f.num_actions() != data.num_actions() || f.num_free_contexts() != data.num_free_contexts()) {
    throw std::invalid_argument("log_likelihood: feature table shape does not match the dataset");
  }
}

template <bool WithGradient>
double evaluate(const ContextDataset& data, const FeatureTable& f, double lambda, double alpha,
                double eta, FeatureTable* gradient) {
  check_shape(data, f);
  const int M = f.num_free_contexts();
  double total = 0.0;
  Eigen::VectorXd sigma(M), carry(M);
  std::vector<Eigen::VectorXd> residual;  // eta (e_x - z) per step, free coordinates
  if constexpr (WithGradient) {
    *gradient = FeatureTable(f.horizon(), f.num_states(), f.num_actions(), M);
  }
  for (const auto& seq : data.sequences()) {
    const int n = static_cast<int>(seq.steps.size());
    sigma.setZero();
    if constexpr (WithGradient) residual.assign(n, Eigen::VectorXd::Zero(M));
    double ll = 0.0;
    for (int h = 0; h < n; ++h) {
      const Step& step = seq.steps[h];
      const Eigen::VectorXd log_z = log_softmax_z(sigma, eta);
      ll += log_z[step.context];
      if constexpr (WithGradient) {
        Eigen::VectorXd r = -eta * log_z.head(M).array().exp().matrix();
        if (step.context < M) r[step.context] += eta;
        residual[h] = std::move(r);
      }
      sigma = alpha * sigma + f.cell(h, step.state, step.action, step.context);
    }
    total += seq.weight * ll;
    if constexpr (WithGradient) {
      // G_t = sum_{h>t} alpha^{h-t-1} e_h via G_t = e_{t+1} + alpha G_{t+1}.
      carry.setZero();
      for (int t = n - 2; t >= 0; --t) {
        carry = residual[t + 1] + alpha * carry;
        const Step& step = seq.steps[t];
        gradient->cell(t, step.state, step.action, step.context) += seq.weight * carry;
      }
    }
  }
  double sq = 0.0;
  for (double v : f.values()) sq += v * v;
  if constexpr (WithGradient) {
    auto& g = gradient->values();
    const auto& v = f.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= 2.0 * lambda * v[i];
  }
  return total - lambda * sq;
}

double bound_at(std::span<const double> bounds, const FeatureTable& f, std::size_t flat) {
  const int M = f.num_free_contexts();
  const std::size_t per_step = static_cast<std::size_t>(f.num_states()) * f.num_actions() *
                               f.num_contexts() * M;
  const std::size_t h = flat / per_step;
  return bounds[h * M + flat % M];
}

void project(std::vector<double>& values, std::span<const double> bounds, const FeatureTable& shape) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double b = bound_at(bounds, shape, i);
    values[i] = std::clamp(values[i], -b, b);
  }
}

}  // namespace

double log_likelihood(const ContextDataset& data, const FeatureTable& features, double lambda,
                      double alpha, double eta) {
  return evaluate<false>(data, features, lambda, alpha, eta, nullptr);
}

double log_likelihood_gradient(const ContextDataset& data, const FeatureTable& features,
                               double lambda, double alpha, double eta, FeatureTable& gradient) {
  return evaluate<true>(data, features, lambda, alpha, eta, &gradient);
}

FeatureEstimate fit_projected_mle(const ContextDataset& data, std::span<const double> feature_bounds,
                                  double lambda, double alpha, double eta, const FitConfig& config,
                                  const FeatureTable* warm_start) {
  const int H = data.horizon(), S = data.num_states(), A = data.num_actions(),
            M = data.num_free_contexts();
  if (feature_bounds.size() != static_cast<std::size_t>(H) * M) {
    throw std::invalid_argument("fit_projected_mle: feature_bounds must have H*M entries");
  }
  if (lambda < 0.0) throw std::invalid_argument("fit_projected_mle: lambda must be nonnegative");

  FeatureEstimate out;
  out.feature_bounds.assign(feature_bounds.begin(), feature_bounds.end());
  out.lambda = lambda;
  out.f_hat = FeatureTable(H, S, A, M);
  if (warm_start) {
    if (!warm_start->same_shape(out.f_hat)) {
      throw std::invalid_argument("fit_projected_mle: warm start has the wrong shape");
    }
    out.f_hat.values() = warm_start->values();
    project(out.f_hat.values(), feature_bounds, out.f_hat);
  }

  FeatureTable grad, trial_grad;
  FeatureTable trial(H, S, A, M);
  double value = log_likelihood_gradient(data, out.f_hat, lambda, alpha, eta, grad);
  auto fail = [&](const char* where, double v) {
    std::ostringstream msg;
    msg << "fit_projected_mle: non-finite objective " << v << " " << where << " (iteration "
        << out.iterations << ", last finite objective " << out.objective << ")";
    throw std::runtime_error(msg.str());
  };
  if (!std::isfinite(value)) fail("at the initial point", value);
  out.objective = value;

  auto mapping_norm = [&](const FeatureTable& at, const FeatureTable& g) {
    double norm = 0.0;
    const auto& f = at.values();
    const auto& d = g.values();
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double b = bound_at(feature_bounds, at, i);
      norm = std::max(norm, std::abs(std::clamp(f[i] + d[i], -b, b) - f[i]));
    }
    return norm;
  };

  double step = config.initial_step;
  out.gradient_mapping_norm = mapping_norm(out.f_hat, grad);
  const std::size_t n = out.f_hat.values().size();
  while (out.gradient_mapping_norm > config.tolerance && out.iterations < config.max_iterations) {
    const auto& f = out.f_hat.values();
    const auto& g = grad.values();
    double trial_value = 0.0;
    double t = step;
    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      auto& y = trial.values();
      double ascent = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double b = bound_at(feature_bounds, trial, i);
        y[i] = std::clamp(f[i] + t * g[i], -b, b);
        ascent += g[i] * (y[i] - f[i]);
      }
      trial_value = log_likelihood_gradient(data, trial, lambda, alpha, eta, trial_grad);
      if (!std::isfinite(trial_value)) {
        t *= config.backtrack;
        continue;
      }
      // Near the optimum the value difference drowns in rounding. By concavity
      // F(y) >= F(f) + grad F(y).(y - f), so the slope at y certifies the same increase.
      double end_slope = 0.0;
      const auto& g2 = trial_grad.values();
      for (std::size_t i = 0; i < n; ++i) end_slope += g2[i] * (y[i] - f[i]);
      const double required = config.armijo * ascent;
      if (trial_value >= value + required || (ascent > 0.0 && end_slope >= required)) {
        accepted = true;
        break;
      }
      t *= config.backtrack;
    }
    if (!accepted) break;  // no ascent possible at machine precision

    // Barzilai-Borwein step for the next iteration: s's / s'y with y the gradient decrease.
    double ss = 0.0, sy = 0.0;
    const auto& y = trial.values();
    const auto& g2 = trial_grad.values();
    for (std::size_t i = 0; i < n; ++i) {
      const double s = y[i] - f[i];
      ss += s * s;
      sy += s * (g[i] - g2[i]);
    }
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : std::min(2.0 * t, 1e10);

    std::swap(out.f_hat, trial);
    std::swap(grad, trial_grad);
    value = trial_value;
    out.objective = value;
    ++out.iterations;
    out.gradient_mapping_norm = mapping_norm(out.f_hat, grad);
  }
  out.converged = out.gradient_mapping_norm <= config.tolerance;
  return out;
}

nlohmann::json estimate_checkpoint_json(std::size_t episode, const FeatureEstimate& estimate,
                                        const EmpiricalModel& model) {
  nlohmann::json doc;
  doc["episode"] = episode;
  doc["lambda"] = estimate.lambda;
  doc["iterations"] = estimate.iterations;
  doc["gradient_mapping_norm"] = estimate.gradient_mapping_norm;
  doc["objective"] = estimate.objective;
  doc["converged"] = estimate.converged;
  doc["shape"] = {estimate.f_hat.horizon(), estimate.f_hat.num_states(), estimate.f_hat.num_actions(),
                  estimate.f_hat.num_contexts(), estimate.f_hat.num_free_contexts()};
  doc["f_hat"] = estimate.f_hat.values();
  doc["feature_bounds"] = estimate.feature_bounds;
  doc["counts"] = model.counts();
  return doc;
}

}  // namespace ldc
