#include "ldc/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "interval_key.hpp"

namespace ldc {

std::vector<double> threshold_set(const Eigen::Ref<const Eigen::VectorXd>& q) {
  std::vector<double> sorted(q.data(), q.data() + q.size());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw std::invalid_argument("threshold_set: non-finite Q value");
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> out;
  out.reserve(sorted.size());
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) out.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  return out;
}

Eigen::VectorXd apply_threshold(double t, const Eigen::Ref<const Eigen::VectorXd>& q,
                                const AggregatedInterval& interval) {
  const Eigen::Index M = interval.lower.size();
  if (q.size() != M + 1 || interval.upper.size() != M) {
    throw std::invalid_argument("apply_threshold: Q must have one more entry than the interval");
  }
  Eigen::VectorXd out(M);
  for (Eigen::Index i = 0; i < M; ++i) out[i] = q[i] < t ? interval.lower[i] : interval.upper[i];
  return out;
}

OptimisticChoice optimistic_combine(const Eigen::Ref<const Eigen::VectorXd>& q,
                                    const AggregatedInterval& interval, double eta) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> candidates{-inf};
  const auto mids = threshold_set(q);
  candidates.insert(candidates.end(), mids.begin(), mids.end());
  candidates.push_back(inf);

  OptimisticChoice best;
  best.value = -inf;
  for (double t : candidates) {
    Eigen::VectorXd sigma = apply_threshold(t, q, interval);
    const double value = softmax_z(sigma, eta).dot(q);
    if (value > best.value) {
      best.value = value;
      best.sigma = std::move(sigma);
      best.threshold = t;
    }
  }
  return best;
}

double brute_force_extreme_max(const Eigen::Ref<const Eigen::VectorXd>& q,
                               const AggregatedInterval& interval, double eta) {
  const Eigen::Index M = interval.lower.size();
  if (M > 20) throw SizeLimitError("brute_force_extreme_max: more than 2^20 corners");
  if (q.size() != M + 1) throw std::invalid_argument("brute_force_extreme_max: Q size mismatch");
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd sigma(M);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << M); ++mask) {
    for (Eigen::Index i = 0; i < M; ++i) {
      sigma[i] = (mask >> i) & 1 ? interval.upper[i] : interval.lower[i];
    }
    best = std::max(best, softmax_z(sigma, eta).dot(q));
  }
  return best;
}

void PlannerModel::validate() const {
  if (num_states < 1 || num_actions < 1 || num_free_contexts < 1 || horizon < 1) {
    throw std::invalid_argument("PlannerModel: sizes must be positive");
  }
  const CellLayout cells = layout();
  if (rewards.size() != cells.size() || transitions.size() != cells.size() * num_states) {
    throw std::invalid_argument("PlannerModel: table sizes do not match the dimensions");
  }
  const FeatureTable shape(horizon, num_states, num_actions, num_free_contexts);
  if (!features.lower.same_shape(shape) || !features.upper.same_shape(shape)) {
    throw std::invalid_argument("PlannerModel: feature interval tables have the wrong shape");
  }
  for (std::size_t i = 0; i < features.lower.values().size(); ++i) {
    if (!(features.lower.values()[i] <= features.upper.values()[i])) {
      throw std::invalid_argument("PlannerModel: feature interval with lower > upper");
    }
  }
  if (!(eta > 0.0) || alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("PlannerModel: need eta > 0 and alpha in [0, 1]");
  }
}

struct OptimisticPlanner::Impl {
  std::unordered_map<NodeKey, PlanNode, NodeKeyHash> nodes;
};

OptimisticPlanner::OptimisticPlanner(PlannerModel model, PlannerConfig config, int initial_state)
    : model_(std::move(model)),
      config_(config),
      initial_state_(initial_state),
      impl_(std::make_shared<Impl>()) {
  model_.validate();
  if (initial_state < 0 || initial_state >= model_.num_states) {
    throw std::invalid_argument("OptimisticPlanner: initial state out of range");
  }
  if (model_.value_cap <= 0.0) model_.value_cap = model_.horizon;
  if (config_.backend == PlannerBackend::kQuantized) {
    epsilon_ = config_.epsilon;
    if (epsilon_ <= 0.0) {
      double b = 0.0;
      for (double v : model_.features.upper.values()) b = std::max(b, std::abs(v));
      for (double v : model_.features.lower.values()) b = std::max(b, std::abs(v));
      epsilon_ = 0.05 * (b > 0.0 ? b : 1.0);
    }
  }
  initial_value_ = solve(0, initial_state_, initial_interval()).value;
}

AggregatedInterval OptimisticPlanner::initial_interval() const {
  return AggregatedInterval::zero(model_.num_free_contexts);
}

AggregatedInterval OptimisticPlanner::advance(const AggregatedInterval& ci, int h, int state,
                                              int action, int context) const {
  AggregatedInterval next{
      model_.alpha * ci.lower + model_.features.lower.cell(h, state, action, context),
      model_.alpha * ci.upper + model_.features.upper.cell(h, state, action, context)};
  if (epsilon_ > 0.0) {
    for (Eigen::Index i = 0; i < next.lower.size(); ++i) {
      next.lower[i] = std::floor(next.lower[i] / epsilon_) * epsilon_;
      next.upper[i] = std::ceil(next.upper[i] / epsilon_) * epsilon_;
    }
  }
  return next;
}

std::size_t OptimisticPlanner::node_count() const { return impl_->nodes.size(); }

int OptimisticPlanner::act(int h, int state, const AggregatedInterval& ci) {
  return solve(h, state, ci).action;
}

double OptimisticPlanner::value(int h, int state, const AggregatedInterval& ci) {
  return solve(h, state, ci).value;
}

const PlanNode& OptimisticPlanner::solve(int h, int state, const AggregatedInterval& ci) {
  if (h < 0 || h >= model_.horizon || state < 0 || state >= model_.num_states) {
    throw std::invalid_argument("OptimisticPlanner: (h, s) out of range");
  }
  NodeKey key = make_node_key(h, state, ci, epsilon_ > 0.0 ? epsilon_ : 1e-12);
  if (auto it = impl_->nodes.find(key); it != impl_->nodes.end()) return it->second;
  if (impl_->nodes.size() >= config_.node_budget) {
    std::ostringstream msg;
    msg << "optimistic planner: node budget " << config_.node_budget << " exceeded at step " << h;
    msg << (config_.backend == PlannerBackend::kExact
                ? "; use the quantized backend for this instance"
                : "; increase epsilon or the node budget");
    throw SizeLimitError(msg.str());
  }

  const int S = model_.num_states, X = model_.num_free_contexts + 1;
  const CellLayout cells = model_.layout();
  PlanNode node;
  node.h = h;
  node.state = state;
  node.interval = ci;
  node.value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd q(X);
  for (int a = 0; a < model_.num_actions; ++a) {
    for (int x = 0; x < X; ++x) {
      const std::size_t cell = cells(h, state, a, x);
      double qx = model_.rewards[cell];
      if (h + 1 < model_.horizon) {
        const AggregatedInterval next = advance(ci, h, state, a, x);
        for (int s2 = 0; s2 < S; ++s2) {
          const double p = model_.transitions[cell * S + s2];
          if (p > 0.0) qx += p * solve(h + 1, s2, next).value;
        }
      }
      q[x] = qx;
    }
    const OptimisticChoice choice = optimistic_combine(q, ci, model_.eta);
    if (choice.value > node.value) {
      node.value = choice.value;
      node.action = a;
      node.threshold = choice.threshold;
    }
  }
  node.value = std::min(node.value, model_.value_cap);
  if (!config_.record_trace) node.interval = AggregatedInterval{};
  return impl_->nodes.emplace(std::move(key), std::move(node)).first->second;
}

nlohmann::json OptimisticPlanner::trace_json() const {
  std::vector<const std::pair<const NodeKey, PlanNode>*> entries;
  entries.reserve(impl_->nodes.size());
  for (const auto& entry : impl_->nodes) entries.push_back(&entry);
  std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
  nlohmann::json out = nlohmann::json::array();
  for (const auto* entry : entries) {
    const PlanNode& node = entry->second;
    nlohmann::json j;
    j["h"] = node.h;
    j["s"] = node.state;
    if (node.interval.lower.size() > 0) {
      j["lower"] = std::vector<double>(node.interval.lower.data(),
                                       node.interval.lower.data() + node.interval.lower.size());
      j["upper"] = std::vector<double>(node.interval.upper.data(),
                                       node.interval.upper.data() + node.interval.upper.size());
    }
    j["value"] = node.value;
    j["action"] = node.action;
    if (std::isfinite(node.threshold)) {
      j["threshold"] = node.threshold;
    } else {
      j["threshold"] = node.threshold > 0 ? "+inf" : "-inf";
    }
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace ldc
