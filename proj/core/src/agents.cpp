#include "ldc/agents.hpp"

#include "ldc/special_cases.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ldc {

ProblemShape ProblemShape::of(const LogisticDcmdp& env) {
  ProblemShape shape;
  shape.num_states = env.num_states;
  shape.num_actions = env.num_actions;
  shape.num_free_contexts = env.num_free_contexts;
  shape.horizon = env.horizon;
  shape.alpha = env.history_discount;
  shape.eta = env.temperature;
  shape.feature_bounds = env.feature_bounds;
  shape.initial_state = env.initial_state;
  if (env.feature_norm_bound > 0.0) {
    shape.norm_bound = env.feature_norm_bound;
  } else {
    // Norm of the box corner: every cell at its bound.
    double sq = 0.0;
    for (double b : env.feature_bounds) sq += b * b;
    shape.norm_bound =
        std::sqrt(sq * env.num_states * env.num_actions * static_cast<double>(env.num_contexts()));
  }
  return shape;
}

// ---------------------------------------------------------------------------
// LDC-UCB

LdcUcbAgent::LdcUcbAgent(ProblemShape shape, LdcUcbConfig config, std::string type)
    : shape_(std::move(shape)),
      config_(std::move(config)),
      type_(std::move(type)),
      model_(shape_.num_states, shape_.num_actions, shape_.num_free_contexts, shape_.horizon),
      data_(shape_.num_states, shape_.num_actions, shape_.num_free_contexts, shape_.horizon) {
  if (config_.refit_every < 1) throw std::invalid_argument("ldc_ucb: refit_every must be >= 1");
  if (config_.bonus_scale < 0.0 || config_.radius_scale < 0.0) {
    throw std::invalid_argument("ldc_ucb: scales must be nonnegative");
  }
  if (!(config_.lambda > 0.0)) throw std::invalid_argument("ldc_ucb: lambda must be positive");
  if (!(config_.delta > 0.0 && config_.delta < 1.0)) {
    throw std::invalid_argument("ldc_ucb: delta must lie in (0, 1)");
  }
  estimate_.f_hat = FeatureTable(shape_.horizon, shape_.num_states, shape_.num_actions,
                                 shape_.num_free_contexts);
  estimate_.feature_bounds = shape_.feature_bounds;
  estimate_.lambda = config_.lambda;
  if (config_.frozen_features) {
    if (!config_.frozen_features->same_shape(estimate_.f_hat)) {
      throw std::invalid_argument("ldc_ucb: frozen features have the wrong shape");
    }
    estimate_.f_hat = *config_.frozen_features;
  }

  scalars_.delta = config_.delta;
  scalars_.norm_bound = shape_.norm_bound;
  if (config_.kappa > 0.0) {
    scalars_.kappa = config_.kappa;
  } else {
    double bmax = 0.0;
    for (double b : shape_.feature_bounds) bmax = std::max(bmax, b);
    const double half_width = reachable_statistic_radius(bmax, shape_.alpha, shape_.horizon);
    scalars_.kappa = estimate_kappa_in_box(shape_.num_free_contexts, shape_.eta, half_width,
                                           config_.kappa_samples, 0)
                         .kappa;
  }
}

void LdcUcbAgent::begin_episode(std::size_t k) {
  episode_ = k;
  const int S = shape_.num_states, A = shape_.num_actions, M = shape_.num_free_contexts,
            H = shape_.horizon, X = M + 1;
  const BonusSizes bonus_sizes{S, A, M, H, config_.num_episodes};
  const RadiusSizes radius_sizes{S, A, M, H};
  const double radius_delta = config_.paper_delta_split ? config_.delta / 4.0 : config_.delta;
  const double kk = static_cast<double>(model_.episodes());
  scalars_.beta = beta_k(kk, radius_sizes, config_.lambda, shape_.norm_bound, radius_delta);
  scalars_.gamma = gamma_k(kk, radius_sizes, config_.lambda, shape_.norm_bound, radius_delta,
                           config_.gamma_variant);
  const double h_alpha = history_discount_horizon(shape_.alpha, H);

  PlannerModel pm;
  pm.num_states = S;
  pm.num_actions = A;
  pm.num_free_contexts = M;
  pm.horizon = H;
  pm.alpha = shape_.alpha;
  pm.eta = shape_.eta;
  const CellLayout cells = pm.layout();
  pm.rewards.resize(cells.size());
  pm.transitions.resize(cells.size() * S);
  radii_.assign(cells.size(), 0.0);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        for (int x = 0; x < X; ++x) {
          const std::size_t cell = cells(h, s, a, x);
          const std::int64_t n = model_.count(h, s, a, x);
          double bonus = 0.0;
          if (config_.bonus_scale > 0.0) {
            bonus = config_.bonus_scale * (reward_bonus(n, bonus_sizes, config_.delta) +
                                           transition_bonus(n, bonus_sizes, config_.delta));
          }
          pm.rewards[cell] = model_.mean_reward(h, s, a, x) + bonus;
          model_.transition_estimate(h, s, a, x,
                                     std::span<double>(pm.transitions.data() + cell * S, S));
          if (config_.radius_scale > 0.0) {
            radii_[cell] = config_.radius_scale *
                           local_feature_radius(static_cast<double>(n), config_.lambda,
                                                scalars_.gamma, scalars_.kappa, h_alpha,
                                                config_.radius_form);
          }
        }
      }
    }
  }
  pm.features = feature_intervals(estimate_.f_hat, radii_, shape_.feature_bounds, config_.clip_to_box);
  try {
    planner_ = std::make_shared<OptimisticPlanner>(std::move(pm), config_.planner,
                                                   shape_.initial_state);
  } catch (const SizeLimitError& e) {
    std::ostringstream msg;
    msg << "episode " << k << ": " << e.what();
    throw SizeLimitError(msg.str());
  }
  ci_ = planner_->initial_interval();
}

int LdcUcbAgent::act(int h, int state, History history) {
  if (!planner_) throw std::logic_error("ldc_ucb: act called before begin_episode");
  if (h == 0) {
    ci_ = planner_->initial_interval();
  } else {
    const Step& prev = history[h - 1];
    ci_ = planner_->advance(ci_, h - 1, prev.state, prev.action, prev.context);
  }
  return planner_->act(h, state, ci_);
}

void LdcUcbAgent::end_episode(const Trajectory& trajectory) {
  model_.update(trajectory);
  if (config_.frozen_features) return;
  data_.add(trajectory);
  if (model_.episodes() % static_cast<std::size_t>(config_.refit_every) == 0) {
    const FeatureTable warm = estimate_.f_hat;
    estimate_ = fit_projected_mle(data_, shape_.feature_bounds, config_.lambda, shape_.alpha,
                                  shape_.eta, config_.fit, &warm);
  }
}

MixedPolicyFn LdcUcbAgent::current_policy() {
  std::shared_ptr<OptimisticPlanner> plan = planner_;
  if (!plan) throw std::logic_error("ldc_ucb: no policy before begin_episode");
  return [plan](int h, int state, History history, std::span<double> out) {
    AggregatedInterval ci = plan->initial_interval();
    for (int t = 0; t < h; ++t) {
      const Step& step = history[t];
      ci = plan->advance(ci, t, step.state, step.action, step.context);
    }
    std::fill(out.begin(), out.end(), 0.0);
    out[plan->act(h, state, ci)] = 1.0;
  };
}

double LdcUcbAgent::planned_value() const {
  return planner_ ? planner_->initial_value() : std::numeric_limits<double>::quiet_NaN();
}

const PlannerModel& LdcUcbAgent::planner_model() const {
  if (!planner_) throw std::logic_error("ldc_ucb: no planner before begin_episode");
  return planner_->model();
}

OptimisticPlanner& LdcUcbAgent::planner() {
  if (!planner_) throw std::logic_error("ldc_ucb: no planner before begin_episode");
  return *planner_;
}

// ---------------------------------------------------------------------------
// UCBVI on (s, previous context)

UcbviAgent::UcbviAgent(ProblemShape shape, double bonus_scale, double delta,
                       std::int64_t num_episodes)
    : shape_(std::move(shape)),
      bonus_scale_(bonus_scale),
      delta_(delta),
      num_episodes_(num_episodes),
      num_aug_(shape_.num_states * (shape_.num_free_contexts + 2)) {
  if (bonus_scale < 0.0) throw std::invalid_argument("ucbvi: bonus scale must be nonnegative");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("ucbvi: delta must lie in (0, 1)");
  const std::size_t cells = static_cast<std::size_t>(shape_.horizon) * num_aug_ * shape_.num_actions;
  counts_.assign(cells, 0);
  reward_sums_.assign(cells, 0.0);
  transition_counts_.assign(cells * num_aug_, 0);
}

int UcbviAgent::augmented(int h, int state, History history) const {
  const int slots = shape_.num_free_contexts + 2;
  const int prev = h == 0 ? slots - 1 : history[h - 1].context;
  return state * slots + prev;
}

void UcbviAgent::begin_episode(std::size_t) {
  const int H = shape_.horizon, A = shape_.num_actions, N = num_aug_;
  const double log_term = std::log(3.0 * N * A * H * static_cast<double>(std::max<std::int64_t>(num_episodes_, 1)) / delta_);
  auto policy = std::make_shared<std::vector<int>>(static_cast<std::size_t>(H) * N, 0);
  std::vector<double> next_v(N, 0.0), v(N, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int u = 0; u < N; ++u) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        const std::size_t cell = (static_cast<std::size_t>(h) * N + u) * A + a;
        const std::int64_t n = counts_[cell];
        double q;
        if (n == 0) {
          q = bonus_scale_ > 0.0 ? H : 0.0;
          if (bonus_scale_ == 0.0) {
            for (int u2 = 0; u2 < N; ++u2) q += next_v[u2] / N;
          }
        } else {
          q = reward_sums_[cell] / n +
              bonus_scale_ * H * std::sqrt(2.0 * log_term / static_cast<double>(n));
          for (int u2 = 0; u2 < N; ++u2) {
            const auto c = transition_counts_[cell * N + u2];
            if (c > 0) q += static_cast<double>(c) / n * next_v[u2];
          }
        }
        q = std::min(q, static_cast<double>(H));
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      v[u] = best;
      (*policy)[static_cast<std::size_t>(h) * N + u] = best_a;
    }
    std::swap(v, next_v);
  }
  const int slots = shape_.num_free_contexts + 2;
  planned_value_ = next_v[shape_.initial_state * slots + slots - 1];
  policy_ = std::move(policy);
}

int UcbviAgent::act(int h, int state, History history) {
  if (!policy_) throw std::logic_error("ucbvi: act called before begin_episode");
  return (*policy_)[static_cast<std::size_t>(h) * num_aug_ + augmented(h, state, history)];
}

void UcbviAgent::end_episode(const Trajectory& trajectory) {
  const int H = shape_.horizon, A = shape_.num_actions, N = num_aug_;
  const int slots = shape_.num_free_contexts + 2;
  if (static_cast<int>(trajectory.steps.size()) != H) {
    throw std::invalid_argument("ucbvi: trajectory length differs from the horizon");
  }
  const History history(trajectory.steps);
  for (int h = 0; h < H; ++h) {
    const Step& step = trajectory.steps[h];
    const int u = augmented(h, step.state, history);
    const int next_state = h + 1 < H ? trajectory.steps[h + 1].state : trajectory.final_state;
    const int u2 = next_state * slots + step.context;
    const std::size_t cell = (static_cast<std::size_t>(h) * N + u) * A + step.action;
    ++counts_[cell];
    reward_sums_[cell] += step.reward;
    ++transition_counts_[cell * N + u2];
  }
}

MixedPolicyFn UcbviAgent::current_policy() {
  if (!policy_) throw std::logic_error("ucbvi: no policy before begin_episode");
  auto policy = policy_;
  const int N = num_aug_, slots = shape_.num_free_contexts + 2;
  return [policy, N, slots](int h, int state, History history, std::span<double> out) {
    const int prev = h == 0 ? slots - 1 : history[h - 1].context;
    std::fill(out.begin(), out.end(), 0.0);
    out[(*policy)[static_cast<std::size_t>(h) * N + state * slots + prev]] = 1.0;
  };
}

// ---------------------------------------------------------------------------
// Oracle and random

OracleAgent::OracleAgent(const LogisticDcmdp& env) : env_(&env) {
  if (history_enumeration_feasible(env)) {
    HistoryDpResult dp = exact_history_dp(env);
    value_ = dp.value;
    history_policy_ = std::make_shared<HistoryPolicy>(std::move(dp.policy));
  } else {
    sigma_dp_ = std::make_shared<SigmaDp>(env);
    value_ = sigma_dp_->initial_value();
  }
}

int OracleAgent::act(int h, int state, History history) {
  if (history_policy_) return history_policy_->act(h, state, history);
  return sigma_dp_->act(h, state, sufficient_statistic(history, env_->latent_features,
                                                       env_->history_discount));
}

MixedPolicyFn OracleAgent::current_policy() {
  auto history_policy = history_policy_;
  auto sigma_dp = sigma_dp_;
  const LogisticDcmdp* env = env_;
  return [history_policy, sigma_dp, env](int h, int state, History history, std::span<double> out) {
    const int a = history_policy
                      ? history_policy->act(h, state, history)
                      : sigma_dp->act(h, state,
                                      sufficient_statistic(history, env->latent_features,
                                                           env->history_discount));
    std::fill(out.begin(), out.end(), 0.0);
    out[a] = 1.0;
  };
}

RandomAgent::RandomAgent(int num_actions, std::uint64_t seed) : num_actions_(num_actions), rng_(seed) {
  if (num_actions < 1) throw std::invalid_argument("random agent: need at least one action");
}

int RandomAgent::act(int, int, History) { return rng_.uniform_int(num_actions_); }

MixedPolicyFn RandomAgent::current_policy() {
  const int A = num_actions_;
  return [A](int, int, History, std::span<double> out) {
    std::fill(out.begin(), out.end(), 1.0 / A);
  };
}

// ---------------------------------------------------------------------------
// Factory

PlannerBackend parse_planner_backend(const std::string& name) {
  if (name == "exact") return PlannerBackend::kExact;
  if (name == "quantized") return PlannerBackend::kQuantized;
  throw std::invalid_argument("unknown planner backend '" + name + "' (expected exact or quantized)");
}

std::string agent_name(const nlohmann::json& spec) {
  if (spec.contains("name")) return spec.at("name").get<std::string>();
  return spec.at("type").get<std::string>();
}

namespace {

template <typename T>
T get_or(const nlohmann::json& spec, const char* key, T fallback) {
  if (!spec.contains(key)) return fallback;
  try {
    return spec.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("agent field '") + key + "' has the wrong type");
  }
}

void check_fields(const nlohmann::json& spec, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : spec.items()) {
    if (key != "type" && key != "name" && !allowed.count(key)) {
      throw std::invalid_argument("unknown agent field '" + key + "' for type '" +
                                  spec.at("type").get<std::string>() + "'");
    }
  }
}

PlannerConfig planner_config(const nlohmann::json& spec, PlannerConfig base) {
  if (!spec.contains("planner")) return base;
  const auto& p = spec.at("planner");
  if (p.contains("backend")) base.backend = parse_planner_backend(p.at("backend").get<std::string>());
  base.epsilon = get_or(p, "epsilon", base.epsilon);
  base.node_budget = get_or<std::size_t>(p, "node_budget", base.node_budget);
  return base;
}

}  // namespace

std::unique_ptr<Agent> make_agent(const nlohmann::json& spec, const LogisticDcmdp& env,
                                  std::uint64_t seed, const AgentDefaults& defaults) {
  if (!spec.is_object() || !spec.contains("type") || !spec.at("type").is_string()) {
    throw std::invalid_argument("agent document needs a string 'type'");
  }
  const std::string type = spec.at("type").get<std::string>();
  if (type == "random") {
    check_fields(spec, {});
    return std::make_unique<RandomAgent>(env.num_actions, seed);
  }
  if (type == "oracle") {
    check_fields(spec, {});
    return std::make_unique<OracleAgent>(env);
  }
  if (type == "ucbvi") {
    check_fields(spec, {"bonus_scale", "delta"});
    return std::make_unique<UcbviAgent>(ProblemShape::of(env),
                                        get_or(spec, "bonus_scale", defaults.bonus_scale),
                                        get_or(spec, "delta", defaults.delta),
                                        defaults.num_episodes);
  }
  if (type == "ldc_ucb" || type == "greedy") {
    check_fields(spec, {"lambda", "delta", "bonus_scale", "radius_scale", "paper_delta_split",
                        "gamma_variant", "radius_form", "kappa", "kappa_samples", "refit_every",
                        "clip_to_box", "fit", "planner", "freeze_features"});
    LdcUcbConfig config;
    config.lambda = get_or(spec, "lambda", config.lambda);
    config.delta = get_or(spec, "delta", defaults.delta);
    config.bonus_scale = get_or(spec, "bonus_scale", defaults.bonus_scale);
    config.radius_scale =
        get_or(spec, "radius_scale", defaults.radius_scale.value_or(config.bonus_scale));
    if (type == "greedy") {
      if (spec.contains("bonus_scale") || spec.contains("radius_scale")) {
        throw std::invalid_argument("greedy agent: scales are fixed at 0");
      }
      config.bonus_scale = 0.0;
      config.radius_scale = 0.0;
    }
    config.paper_delta_split = get_or(spec, "paper_delta_split", config.paper_delta_split);
    const std::string gamma = get_or<std::string>(spec, "gamma_variant", "appendix");
    if (gamma == "appendix") {
      config.gamma_variant = GammaVariant::kAppendix;
    } else if (gamma == "main") {
      config.gamma_variant = GammaVariant::kMainText;
    } else {
      throw std::invalid_argument("gamma_variant must be 'appendix' or 'main'");
    }
    const std::string form = get_or<std::string>(spec, "radius_form", "appendix");
    if (form == "appendix") {
      config.radius_form = RadiusForm::kAppendix;
    } else if (form == "main") {
      config.radius_form = RadiusForm::kMainText;
    } else {
      throw std::invalid_argument("radius_form must be 'appendix' or 'main'");
    }
    config.kappa = get_or(spec, "kappa", config.kappa);
    config.kappa_samples = get_or(spec, "kappa_samples", config.kappa_samples);
    config.refit_every = get_or(spec, "refit_every", config.refit_every);
    config.clip_to_box = get_or(spec, "clip_to_box", config.clip_to_box);
    config.num_episodes = defaults.num_episodes;
    if (spec.contains("fit")) {
      const auto& fit = spec.at("fit");
      config.fit.tolerance = get_or(fit, "tolerance", config.fit.tolerance);
      config.fit.max_iterations = get_or(fit, "max_iterations", config.fit.max_iterations);
    }
    config.planner = planner_config(spec, defaults.planner);
    if (get_or(spec, "freeze_features", false)) config.frozen_features = env.latent_features;
    return std::make_unique<LdcUcbAgent>(ProblemShape::of(env), std::move(config), type);
  }
  throw std::invalid_argument("unknown agent type '" + type +
                              "' (expected ldc_ucb, ucbvi, oracle, random or greedy)");
}

}  // namespace ldc
