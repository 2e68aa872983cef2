#pragma once

#include "ldc/dcmdp.hpp"
#include "ldc/simulate.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace ldc {

/// Optimal deterministic policy over full histories, stored per step as a
/// dense table indexed by the encoded history prefix and current state.
class HistoryPolicy {
 public:
  HistoryPolicy() = default;
  HistoryPolicy(int num_states, int num_actions, int num_contexts, int horizon);

  int act(int h, int state, History history) const;
  PolicyFn as_policy() const;

  /// Base-(S*A*X) code of the (s, a, x) prefix.
  std::uint64_t encode(History history) const;
  void set(int h, std::uint64_t code, int state, int action);

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  int num_contexts_ = 0;
  std::vector<std::vector<int>> actions_;  // [h][code * S + s]
};

struct HistoryDpResult {
  double value = 0.0;
  HistoryPolicy policy;
  std::uint64_t histories = 0;
};

/// V* and pi* by backward induction over every history under the true model.
/// Throws SizeLimitError when (S*A*(M+1))^H exceeds max_histories. Ties go to
/// the lowest action index.
HistoryDpResult exact_history_dp(const LogisticDcmdp& env,
                                 std::uint64_t max_histories = kDefaultHistoryBudget);

/// DP over (h, s, sigma) with sigma memoized at 1e-12 resolution. Nodes are
/// solved on demand, so the object doubles as an optimal policy.
class SigmaDp {
 public:
  explicit SigmaDp(const LogisticDcmdp& env, std::size_t max_nodes = 2'000'000);
  ~SigmaDp();
  SigmaDp(SigmaDp&&) noexcept;
  SigmaDp& operator=(SigmaDp&&) noexcept;

  double initial_value();
  double value(int h, int state, const Eigen::Ref<const Eigen::VectorXd>& sigma);
  int act(int h, int state, const Eigen::Ref<const Eigen::VectorXd>& sigma);
  std::size_t node_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct SigmaDpResult {
  double value = 0.0;
  std::size_t nodes = 0;
};

SigmaDpResult sigma_augmented_dp(const LogisticDcmdp& env, std::size_t max_nodes = 2'000'000);

}  // namespace ldc
