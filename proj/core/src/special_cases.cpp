#include "ldc/special_cases.hpp"

#include "ldc/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ldc {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

void require_distribution(std::span<const double> p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= 0.0, what + ": negative or non-finite probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << what << ": row sums to " << total;
    throw std::invalid_argument(msg.str());
  }
}

std::uint64_t checked_power(std::uint64_t base, int exponent, std::uint64_t cap) {
  std::uint64_t result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && result > cap / base) return cap + 1;
    result *= base;
  }
  return result;
}

}  // namespace

void TabularMdp::validate() const {
  require(num_states > 0 && num_actions > 0 && horizon > 0, "TabularMdp: sizes must be positive");
  require(rewards.size() == static_cast<std::size_t>(num_states) * num_actions,
          "TabularMdp: rewards has the wrong size");
  require(transitions.size() == static_cast<std::size_t>(num_states) * num_actions * num_states,
          "TabularMdp: transitions has the wrong size");
  require(initial_distribution.size() == static_cast<std::size_t>(num_states),
          "TabularMdp: initial_distribution has the wrong size");
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) require_distribution(transition(s, a), "TabularMdp");
  }
  require_distribution(initial_distribution, "TabularMdp initial distribution");
}

TabularSolution value_iteration(const TabularMdp& mdp) {
  mdp.validate();
  TabularSolution out;
  out.values.assign(mdp.horizon + 1, std::vector<double>(mdp.num_states, 0.0));
  out.policy.assign(mdp.horizon, std::vector<int>(mdp.num_states, 0));
  for (int h = mdp.horizon - 1; h >= 0; --h) {
    for (int s = 0; s < mdp.num_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.num_actions; ++a) {
        double q = mdp.reward(s, a);
        const auto p = mdp.transition(s, a);
        for (int n = 0; n < mdp.num_states; ++n) q += p[n] * out.values[h + 1][n];
        if (q > best) {
          best = q;
          out.policy[h][s] = a;
        }
      }
      out.values[h][s] = best;
    }
  }
  for (int s = 0; s < mdp.num_states; ++s) {
    out.initial_value += mdp.initial_distribution[s] * out.values[0][s];
  }
  return out;
}

void MarkovDcmdp::validate() const {
  require(num_states > 0 && num_actions > 0 && num_contexts > 0 && horizon > 0,
          "MarkovDcmdp: sizes must be positive");
  const std::size_t X = num_contexts, S = num_states, A = num_actions;
  require(rewards.size() == X * S * A, "MarkovDcmdp: rewards has the wrong size");
  require(transitions.size() == X * S * A * S, "MarkovDcmdp: transitions has the wrong size");
  require(context_kernel.size() == X * S * A * X, "MarkovDcmdp: context_kernel has the wrong size");
  require(initial_context.size() == X, "MarkovDcmdp: initial_context has the wrong size");
  require(initial_state >= 0 && initial_state < num_states, "MarkovDcmdp: bad initial_state");
  for (double r : rewards) require(r >= 0.0 && r <= 1.0, "MarkovDcmdp: rewards must lie in [0,1]");
  for (int x = 0; x < num_contexts; ++x) {
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        require_distribution(transition(x, s, a), "MarkovDcmdp transition");
        require_distribution(next_context(x, s, a), "MarkovDcmdp context kernel");
      }
    }
  }
  require_distribution(initial_context, "MarkovDcmdp initial context");
}

TabularMdp make_markov_augmented(const MarkovDcmdp& markov) {
  markov.validate();
  const int S = markov.num_states, A = markov.num_actions, X = markov.num_contexts;
  TabularMdp mdp;
  mdp.num_states = S * X;
  mdp.num_actions = A;
  mdp.horizon = markov.horizon;
  mdp.rewards.assign(static_cast<std::size_t>(S) * X * A, 0.0);
  mdp.transitions.assign(static_cast<std::size_t>(S) * X * A * S * X, 0.0);
  mdp.initial_distribution.assign(static_cast<std::size_t>(S) * X, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int x = 0; x < X; ++x) {
      const int from = s * X + x;
      for (int a = 0; a < A; ++a) {
        mdp.rewards[static_cast<std::size_t>(from) * A + a] = markov.reward(x, s, a);
        const auto ps = markov.transition(x, s, a);
        const auto px = markov.next_context(x, s, a);
        double* row = mdp.transitions.data() + (static_cast<std::size_t>(from) * A + a) * S * X;
        for (int s2 = 0; s2 < S; ++s2) {
          for (int x2 = 0; x2 < X; ++x2) row[s2 * X + x2] = ps[s2] * px[x2];
        }
      }
    }
  }
  for (int x = 0; x < X; ++x) {
    mdp.initial_distribution[static_cast<std::size_t>(markov.initial_state) * X + x] =
        markov.initial_context[x];
  }
  return mdp;
}

TabularMdp make_previous_context_mdp(const LogisticDcmdp& env) {
  env.validate();
  require(env.history_discount == 0.0, "make_previous_context_mdp: alpha must be 0");
  const auto& f = env.latent_features;
  const int S = env.num_states, A = env.num_actions, X = env.num_contexts(), Y = X + 1;
  for (int h = 0; h < env.horizon; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int x = 0; x < X; ++x)
          require(f.cell(h, s, a, x) == f.cell(0, 0, 0, x),
                  "make_previous_context_mdp: features must depend on the context only");
  std::vector<Eigen::VectorXd> z(Y);
  for (int y = 0; y < X; ++y) z[y] = softmax_z(f.cell(0, 0, 0, y), env.temperature);
  z[X] = softmax_z(Eigen::VectorXd::Zero(env.num_free_contexts), env.temperature);

  TabularMdp mdp;
  mdp.num_states = S * Y;
  mdp.num_actions = A;
  mdp.horizon = env.horizon;
  mdp.rewards.assign(static_cast<std::size_t>(S) * Y * A, 0.0);
  mdp.transitions.assign(static_cast<std::size_t>(S) * Y * A * S * Y, 0.0);
  mdp.initial_distribution.assign(static_cast<std::size_t>(S) * Y, 0.0);
  mdp.initial_distribution[static_cast<std::size_t>(env.initial_state) * Y + X] = 1.0;
  for (int s = 0; s < S; ++s) {
    for (int y = 0; y < Y; ++y) {
      const std::size_t from = static_cast<std::size_t>(s) * Y + y;
      for (int a = 0; a < A; ++a) {
        double* row = mdp.transitions.data() + (from * A + a) * S * Y;
        for (int x = 0; x < X; ++x) {
          mdp.rewards[from * A + a] += z[y][x] * env.reward(x, s, a);
          const auto p = env.transition(x, s, a);
          for (int s2 = 0; s2 < S; ++s2) row[s2 * Y + x] += z[y][x] * p[s2];
        }
      }
    }
  }
  return mdp;
}

namespace {

// Value of acting optimally from step h, at state s with current context x,
// given the full history so far. The history is carried explicitly so that
// every node of the tree is a distinct history; only its last triple feeds
// the context kernel.
double markov_history_node(const MarkovDcmdp& m, std::vector<Step>& history, int h, int s, int x) {
  if (h == m.horizon) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < m.num_actions; ++a) {
    double q = m.reward(x, s, a);
    if (h + 1 < m.horizon) {
      history.push_back(Step{s, a, x, m.reward(x, s, a)});
      const auto ps = m.transition(x, s, a);
      const auto px = m.next_context(x, s, a);
      for (int s2 = 0; s2 < m.num_states; ++s2) {
        if (ps[s2] == 0.0) continue;
        for (int x2 = 0; x2 < m.num_contexts; ++x2) {
          if (px[x2] == 0.0) continue;
          q += ps[s2] * px[x2] * markov_history_node(m, history, h + 1, s2, x2);
        }
      }
      history.pop_back();
    }
    best = std::max(best, q);
  }
  return best;
}

}  // namespace

double markov_history_value(const MarkovDcmdp& markov, std::uint64_t max_histories) {
  markov.validate();
  const std::uint64_t branching = static_cast<std::uint64_t>(markov.num_states) *
                                  markov.num_actions * markov.num_contexts;
  if (checked_power(branching, markov.horizon, max_histories) > max_histories) {
    throw SizeLimitError("markov_history_value: history tree exceeds the enumeration budget");
  }
  std::vector<Step> history;
  double value = 0.0;
  for (int x = 0; x < markov.num_contexts; ++x) {
    if (markov.initial_context[x] == 0.0) continue;
    value += markov.initial_context[x] *
             markov_history_node(markov, history, 0, markov.initial_state, x);
  }
  return value;
}

LogisticDcmdp make_termdp(const TabularMdp& base, const std::vector<double>& costs,
                          double temperature, int initial_state) {
  base.validate();
  const int S = base.num_states, A = base.num_actions, H = base.horizon;
  require(costs.size() == static_cast<std::size_t>(H) * S * A, "make_termdp: costs must be [H][S][A]");
  for (double c : costs) require(std::isfinite(c), "make_termdp: costs must be finite");
  const int sink = S;
  LogisticDcmdp env = make_empty_dcmdp(S + 1, A, 1, H, 1.0);
  env.temperature = temperature;
  env.initial_state = initial_state;
  constexpr int kTerm = 0, kContinue = 1;
  for (int x : {kTerm, kContinue}) {
    for (int s = 0; s <= S; ++s) {
      for (int a = 0; a < A; ++a) {
        auto row = env.transition(x, s, a);
        std::fill(row.begin(), row.end(), 0.0);
        if (s == sink || x == kTerm) {
          row[sink] = 1.0;
        } else {
          const auto p = base.transition(s, a);
          std::copy(p.begin(), p.end(), row.begin());
        }
        env.reward(x, s, a) = s == sink ? 0.0 : base.reward(s, a);
      }
    }
  }
  double max_cost = 0.0, squared = 0.0;
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double c = costs[(static_cast<std::size_t>(h) * S + s) * A + a];
        for (int x : {kTerm, kContinue}) {
          env.latent_features.cell(h, s, a, x)[0] = c;
          squared += c * c;
        }
        max_cost = std::max(max_cost, std::abs(c));
      }
    }
  }
  std::fill(env.feature_bounds.begin(), env.feature_bounds.end(), max_cost);
  env.feature_norm_bound = std::sqrt(squared);
  env.validate();
  return env;
}

std::vector<double> termdp_survival(std::span<const double> step_costs, double temperature) {
  std::vector<double> survival{1.0};
  double aggregate = 0.0;
  for (double c : step_costs) {
    Eigen::VectorXd sigma(1);
    sigma << aggregate;
    const double terminate = softmax_z(sigma, temperature)[0];
    survival.push_back(survival.back() * (1.0 - terminate));
    aggregate += c;
  }
  return survival;
}

LogisticDcmdp make_rw_recommender(const std::vector<int>& dispositions, double beta, double alpha,
                                  int horizon, double temperature) {
  require(!dispositions.empty(), "make_rw_recommender: need at least one item");
  for (int u : dispositions) {
    require(u >= -1 && u <= 1, "make_rw_recommender: dispositions must lie in {-1, 0, 1}");
  }
  const int A = static_cast<int>(dispositions.size());
  LogisticDcmdp env = make_empty_dcmdp(4, A, 1, horizon, alpha);
  env.temperature = temperature;
  env.initial_state = kRwNoAnswerState;
  constexpr int kAnswer = 0, kDecline = 1;
  double squared = 0.0;
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int x : {kAnswer, kDecline}) {
        auto row = env.transition(x, s, a);
        std::fill(row.begin(), row.end(), 0.0);
        row[x == kAnswer ? dispositions[a] + 1 : kRwNoAnswerState] = 1.0;
        env.reward(x, s, a) = x == kAnswer ? 1.0 : 0.0;
      }
    }
  }
  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < 4; ++s) {
      for (int a = 0; a < A; ++a) {
        for (int x : {kAnswer, kDecline}) {
          env.latent_features.cell(h, s, a, x)[0] = beta * dispositions[a];
          squared += beta * beta * dispositions[a] * dispositions[a];
        }
      }
    }
  }
  std::fill(env.feature_bounds.begin(), env.feature_bounds.end(), std::abs(beta));
  env.feature_norm_bound = std::sqrt(squared);
  env.validate();
  return env;
}

double softmax_covariance_min_eigenvalue(const Eigen::Ref<const Eigen::VectorXd>& sigma,
                                         double eta) {
  const Eigen::Index M = sigma.size();
  const Eigen::VectorXd z = softmax_z(sigma, eta).head(M);
  Eigen::MatrixXd cov = -z * z.transpose();
  cov.diagonal() += z;
  if (M == 1) return cov(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

KappaEstimate estimate_kappa_in_box(int num_free_contexts, double eta, double half_width,
                                    std::size_t num_samples, std::uint64_t seed) {
  require(num_samples >= 1, "estimate_kappa: num_samples must be at least 1");
  require(num_free_contexts >= 1, "estimate_kappa: need at least one free context");
  require(half_width >= 0.0 && std::isfinite(half_width), "estimate_kappa: bad box");
  const int M = num_free_contexts;
  KappaEstimate out;
  double lowest = std::numeric_limits<double>::infinity();
  Eigen::VectorXd sigma(M);
  auto visit = [&] {
    lowest = std::min(lowest, softmax_covariance_min_eigenvalue(sigma, eta));
    ++out.points_evaluated;
  };
  if (M <= 20) {
    out.corners_enumerated = true;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << M); ++mask) {
      for (int i = 0; i < M; ++i) sigma[i] = (mask >> i) & 1 ? half_width : -half_width;
      visit();
    }
  }
  Rng rng(seed);
  for (std::size_t n = 0; n < num_samples; ++n) {
    for (int i = 0; i < M; ++i) sigma[i] = rng.uniform(-half_width, half_width);
    visit();
  }
  out.min_eigenvalue = lowest;
  out.kappa = 1.0 / lowest;
  return out;
}

KappaEstimate estimate_kappa(const LogisticDcmdp& env, std::size_t num_samples,
                             std::uint64_t seed) {
  const double radius =
      reachable_statistic_radius(env.max_feature_bound(), env.history_discount, env.horizon);
  return estimate_kappa_in_box(env.num_free_contexts, env.temperature, radius, num_samples, seed);
}

}  // namespace ldc
