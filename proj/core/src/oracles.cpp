#include "ldc/oracles.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "interval_key.hpp"

namespace ldc {

HistoryPolicy::HistoryPolicy(int num_states, int num_actions, int num_contexts, int horizon)
    : num_states_(num_states), num_actions_(num_actions), num_contexts_(num_contexts) {
  const std::uint64_t branching =
      static_cast<std::uint64_t>(num_states) * num_actions * num_contexts;
  std::uint64_t codes = 1;
  actions_.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    actions_[h].assign(codes * num_states, 0);
    codes *= branching;
  }
}

std::uint64_t HistoryPolicy::encode(History history) const {
  std::uint64_t code = 0;
  const std::uint64_t branching =
      static_cast<std::uint64_t>(num_states_) * num_actions_ * num_contexts_;
  for (const Step& step : history) {
    code = code * branching +
           (static_cast<std::uint64_t>(step.state) * num_actions_ + step.action) * num_contexts_ +
           step.context;
  }
  return code;
}

void HistoryPolicy::set(int h, std::uint64_t code, int state, int action) {
  actions_[h][code * num_states_ + state] = action;
}

int HistoryPolicy::act(int h, int state, History history) const {
  if (h < 0 || h >= static_cast<int>(actions_.size()) || static_cast<int>(history.size()) != h) {
    throw std::invalid_argument("HistoryPolicy::act: history length must equal the step index");
  }
  return actions_[h][encode(history) * num_states_ + state];
}

PolicyFn HistoryPolicy::as_policy() const {
  return [self = *this](int h, int state, History history) { return self.act(h, state, history); };
}

namespace {

struct HistorySolver {
  const LogisticDcmdp& env;
  HistoryPolicy& policy;
  std::uint64_t branching;

  double node(int h, int state, const Eigen::VectorXd& sigma, std::uint64_t code) {
    if (h == env.horizon) return 0.0;
    const Eigen::VectorXd z = softmax_z(sigma, env.temperature);
    const int A = env.num_actions, X = env.num_contexts(), S = env.num_states;
    double best = -std::numeric_limits<double>::infinity();
    int best_action = 0;
    for (int a = 0; a < A; ++a) {
      double q = 0.0;
      for (int x = 0; x < X; ++x) {
        double qx = env.reward(x, state, a);
        if (h + 1 < env.horizon) {
          Eigen::VectorXd next = sigma;
          const Step step{state, a, x, 0.0};
          advance_statistic(next, env.latent_features, env.history_discount, h, step);
          const std::uint64_t child =
              code * branching + (static_cast<std::uint64_t>(state) * A + a) * X + x;
          const auto p = env.transition(x, state, a);
          for (int s2 = 0; s2 < S; ++s2) {
            if (p[s2] > 0.0) qx += p[s2] * node(h + 1, s2, next, child);
          }
        }
        q += z[x] * qx;
      }
      if (q > best) {
        best = q;
        best_action = a;
      }
    }
    policy.set(h, code, state, best_action);
    return best;
  }
};

}  // namespace

HistoryDpResult exact_history_dp(const LogisticDcmdp& env, std::uint64_t max_histories) {
  if (!history_enumeration_feasible(env, max_histories)) {
    throw SizeLimitError("exact_history_dp: history tree exceeds the enumeration budget");
  }
  HistoryDpResult out;
  out.histories = history_count(env, max_histories);
  out.policy = HistoryPolicy(env.num_states, env.num_actions, env.num_contexts(), env.horizon);
  HistorySolver solver{env, out.policy,
                       static_cast<std::uint64_t>(env.num_states) * env.num_actions *
                           env.num_contexts()};
  out.value = solver.node(0, env.initial_state, Eigen::VectorXd::Zero(env.num_free_contexts), 0);
  return out;
}

struct SigmaDp::Impl {
  const LogisticDcmdp* env;
  std::size_t max_nodes;
  struct Entry {
    double value;
    int action;
  };
  std::unordered_map<NodeKey, Entry, NodeKeyHash> memo;

  const Entry& solve(int h, int state, const Eigen::VectorXd& sigma) {
    NodeKey key = make_point_key(h, state, sigma, 1e-12);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (memo.size() >= max_nodes) {
      std::ostringstream msg;
      msg << "sigma_augmented_dp: more than " << max_nodes << " distinct (h, s, sigma) nodes";
      throw SizeLimitError(msg.str());
    }
    const LogisticDcmdp& e = *env;
    const Eigen::VectorXd z = softmax_z(sigma, e.temperature);
    const int A = e.num_actions, X = e.num_contexts(), S = e.num_states;
    Entry entry{-std::numeric_limits<double>::infinity(), 0};
    for (int a = 0; a < A; ++a) {
      double q = 0.0;
      for (int x = 0; x < X; ++x) {
        double qx = e.reward(x, state, a);
        if (h + 1 < e.horizon) {
          Eigen::VectorXd next = sigma;
          advance_statistic(next, e.latent_features, e.history_discount, h, Step{state, a, x, 0.0});
          const auto p = e.transition(x, state, a);
          for (int s2 = 0; s2 < S; ++s2) {
            if (p[s2] > 0.0) qx += p[s2] * solve(h + 1, s2, next).value;
          }
        }
        q += z[x] * qx;
      }
      if (q > entry.value) entry = {q, a};
    }
    return memo.emplace(std::move(key), entry).first->second;
  }
};

SigmaDp::SigmaDp(const LogisticDcmdp& env, std::size_t max_nodes)
    : impl_(std::make_unique<Impl>(Impl{&env, max_nodes, {}})) {}
SigmaDp::~SigmaDp() = default;
SigmaDp::SigmaDp(SigmaDp&&) noexcept = default;
SigmaDp& SigmaDp::operator=(SigmaDp&&) noexcept = default;

double SigmaDp::initial_value() {
  return impl_->solve(0, impl_->env->initial_state,
                      Eigen::VectorXd::Zero(impl_->env->num_free_contexts))
      .value;
}

double SigmaDp::value(int h, int state, const Eigen::Ref<const Eigen::VectorXd>& sigma) {
  if (h >= impl_->env->horizon) return 0.0;
  return impl_->solve(h, state, sigma).value;
}

int SigmaDp::act(int h, int state, const Eigen::Ref<const Eigen::VectorXd>& sigma) {
  return impl_->solve(h, state, sigma).action;
}

std::size_t SigmaDp::node_count() const { return impl_->memo.size(); }

SigmaDpResult sigma_augmented_dp(const LogisticDcmdp& env, std::size_t max_nodes) {
  SigmaDp dp(env, max_nodes);
  SigmaDpResult out;
  out.value = dp.initial_value();
  out.nodes = dp.node_count();
  return out;
}

}  // namespace ldc
