#pragma once

#include "ldc/dcmdp.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ldc {

/// Environment families understood by generate_env.
inline const std::vector<std::string> kEnvFamilies = {
    "random-logistic", "markov", "termdp", "rw", "embedding-attraction", "embedding-novelty"};

/// Deterministic environment generator. Recipe fields:
///   family (required), seed (default 0),
///   num_states, num_actions, num_free_contexts, horizon, alpha,
///   feature_bound (default 1), temperature (default H_alpha^{-1/2}).
/// Families:
///   random-logistic  rewards U[0,1], transitions Dirichlet(1), features U[-b, b].
///   markov           as random-logistic with alpha = 0 and features that depend
///                    on the context only, so (s, previous context) is Markov.
///   termdp           random base MDP, costs U[0, b]; num_free_contexts is 1.
///   rw               dispositions U{-1,0,1} per item, `beta` (default 1).
///   embedding-*      synthetic Gaussian embeddings of dimension `dim`, or the
///                    cache named by `embeddings`; `mu_scale` (default 1).
///                    Sizes default to M = 6, A = 6, d = 20, H = 300, alpha = 0.99.
/// Relative `embeddings` paths resolve against base_dir. Warnings raised while
/// building are appended to `warnings` when given.
LogisticDcmdp generate_env(const nlohmann::json& recipe, const std::filesystem::path& base_dir = {},
                           std::vector<std::string>* warnings = nullptr);

}  // namespace ldc
