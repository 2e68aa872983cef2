#include "ldc/gen_env.hpp"

#include "ldc/embedding.hpp"
#include "ldc/io.hpp"
#include "ldc/rng.hpp"
#include "ldc/special_cases.hpp"

#include <algorithm>
#include <set>

namespace ldc {

namespace {

const std::set<std::string> kCommonFields = {"family", "seed", "num_states", "num_actions",
                                             "num_free_contexts", "horizon", "alpha",
                                             "feature_bound", "temperature"};

template <typename T>
T field_or(const nlohmann::json& recipe, const char* key, T fallback) {
  if (!recipe.contains(key)) return fallback;
  try {
    return recipe.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("recipe field '") + key + "' has the wrong type");
  }
}

void check_fields(const nlohmann::json& recipe, const std::set<std::string>& extra) {
  for (const auto& [key, value] : recipe.items()) {
    if (!kCommonFields.count(key) && !extra.count(key)) {
      throw std::invalid_argument("unknown recipe field '" + key + "'");
    }
  }
}

void require_positive(int value, const char* name) {
  if (value < 1) throw std::invalid_argument(std::string("recipe: ") + name + " must be >= 1");
}

void fill_rewards_and_transitions(LogisticDcmdp& env, Rng& rng) {
  for (double& r : env.rewards) r = rng.uniform();
  const int S = env.num_states;
  for (std::size_t row = 0; row < env.transitions.size() / S; ++row) {
    double total = 0.0;
    double* p = env.transitions.data() + row * S;
    for (int s = 0; s < S; ++s) total += (p[s] = rng.exponential());
    for (int s = 0; s < S; ++s) p[s] /= total;
  }
}

struct Sizes {
  int S, A, M, H;
  double alpha, b;
};

Sizes read_sizes(const nlohmann::json& recipe, Sizes defaults) {
  Sizes z{field_or(recipe, "num_states", defaults.S), field_or(recipe, "num_actions", defaults.A),
          field_or(recipe, "num_free_contexts", defaults.M), field_or(recipe, "horizon", defaults.H),
          field_or(recipe, "alpha", defaults.alpha), field_or(recipe, "feature_bound", defaults.b)};
  require_positive(z.S, "num_states");
  require_positive(z.A, "num_actions");
  require_positive(z.M, "num_free_contexts");
  require_positive(z.H, "horizon");
  if (!(z.alpha >= 0.0 && z.alpha <= 1.0)) throw std::invalid_argument("recipe: alpha must lie in [0, 1]");
  if (!(z.b >= 0.0)) throw std::invalid_argument("recipe: feature_bound must be nonnegative");
  return z;
}

LogisticDcmdp random_logistic(const nlohmann::json& recipe, Rng& rng, bool markov) {
  check_fields(recipe, {});
  Sizes z = read_sizes(recipe, {2, 2, 1, 3, markov ? 0.0 : 0.5, 1.0});
  if (markov) {
    if (recipe.contains("alpha") && z.alpha != 0.0) {
      throw std::invalid_argument("recipe: the markov family has alpha = 0");
    }
    z.alpha = 0.0;
  }
  LogisticDcmdp env = make_empty_dcmdp(z.S, z.A, z.M, z.H, z.alpha);
  fill_rewards_and_transitions(env, rng);
  std::fill(env.feature_bounds.begin(), env.feature_bounds.end(), z.b);
  auto& f = env.latent_features;
  if (markov) {
    std::vector<Eigen::VectorXd> by_context(z.M + 1, Eigen::VectorXd(z.M));
    for (auto& v : by_context)
      for (int i = 0; i < z.M; ++i) v[i] = rng.uniform(-z.b, z.b);
    for (int h = 0; h < z.H; ++h)
      for (int s = 0; s < z.S; ++s)
        for (int a = 0; a < z.A; ++a)
          for (int x = 0; x <= z.M; ++x) f.cell(h, s, a, x) = by_context[x];
  } else {
    for (double& v : f.values()) v = rng.uniform(-z.b, z.b);
  }
  return env;
}

LogisticDcmdp termdp(const nlohmann::json& recipe, Rng& rng) {
  check_fields(recipe, {});
  const Sizes z = read_sizes(recipe, {2, 2, 1, 3, 1.0, 1.0});
  if (z.M != 1 || z.alpha != 1.0) {
    throw std::invalid_argument("recipe: the termdp family has num_free_contexts = 1 and alpha = 1");
  }
  TabularMdp base;
  base.num_states = z.S;
  base.num_actions = z.A;
  base.horizon = z.H;
  base.rewards.resize(static_cast<std::size_t>(z.S) * z.A);
  base.transitions.resize(static_cast<std::size_t>(z.S) * z.A * z.S);
  base.initial_distribution.assign(z.S, 0.0);
  base.initial_distribution[0] = 1.0;
  for (double& r : base.rewards) r = rng.uniform();
  for (std::size_t row = 0; row < base.transitions.size() / z.S; ++row) {
    double total = 0.0;
    double* p = base.transitions.data() + row * z.S;
    for (int s = 0; s < z.S; ++s) total += (p[s] = rng.exponential());
    for (int s = 0; s < z.S; ++s) p[s] /= total;
  }
  std::vector<double> costs(static_cast<std::size_t>(z.H) * z.S * z.A);
  for (double& c : costs) c = rng.uniform(0.0, z.b);
  const double eta = field_or(recipe, "temperature", 1.0);
  return make_termdp(base, costs, eta, 0);
}

LogisticDcmdp rw(const nlohmann::json& recipe, Rng& rng) {
  check_fields(recipe, {"beta"});
  if (recipe.contains("num_states") || recipe.contains("num_free_contexts")) {
    throw std::invalid_argument("recipe: the rw family fixes num_states = 4 and num_free_contexts = 1");
  }
  const Sizes z = read_sizes(recipe, {4, 3, 1, 10, 0.9, 1.0});
  const double beta = field_or(recipe, "beta", 1.0);
  std::vector<int> dispositions(z.A);
  for (int& u : dispositions) u = rng.uniform_int(3) - 1;
  return make_rw_recommender(dispositions, beta, z.alpha, z.H,
                             field_or(recipe, "temperature", 1.0));
}

LogisticDcmdp embedding(const nlohmann::json& recipe, Rng&, EmbeddingMode mode,
                        const std::filesystem::path& base_dir, std::vector<std::string>* warnings) {
  check_fields(recipe, {"dim", "embeddings", "mu_scale"});
  if (recipe.contains("num_states")) {
    throw std::invalid_argument("recipe: embedding environments have a single state");
  }
  const Sizes z = read_sizes(recipe, {1, 6, 6, 300, 0.99, 1.0});
  const auto seed = field_or<std::uint64_t>(recipe, "seed", 0);
  EmbeddingEnvSpec spec;
  if (recipe.contains("embeddings")) {
    std::filesystem::path path = recipe.at("embeddings").get<std::string>();
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    spec = spec_from_embeddings(read_json_file(path), z.M, z.A, mode, z.alpha, z.H, seed);
  } else {
    const int dim = field_or(recipe, "dim", 20);
    require_positive(dim, "dim");
    spec = synthetic_embedding_spec(z.M, z.A, dim, mode, z.alpha, z.H, seed);
  }
  spec.mu_scale = field_or(recipe, "mu_scale", z.b);
  spec.temperature = field_or(recipe, "temperature", 0.0);
  return build_embedding_env(spec, warnings);
}

}  // namespace

LogisticDcmdp generate_env(const nlohmann::json& recipe, const std::filesystem::path& base_dir,
                           std::vector<std::string>* warnings) {
  if (!recipe.is_object() || !recipe.contains("family") || !recipe.at("family").is_string()) {
    throw std::invalid_argument("recipe needs a string 'family'");
  }
  const std::string family = recipe.at("family").get<std::string>();
  Rng rng(field_or<std::uint64_t>(recipe, "seed", 0));
  LogisticDcmdp env;
  if (family == "random-logistic" || family == "markov") {
    env = random_logistic(recipe, rng, family == "markov");
  } else if (family == "termdp") {
    env = termdp(recipe, rng);
  } else if (family == "rw") {
    env = rw(recipe, rng);
  } else if (family == "embedding-attraction") {
    env = embedding(recipe, rng, EmbeddingMode::kAttraction, base_dir, warnings);
  } else if (family == "embedding-novelty") {
    env = embedding(recipe, rng, EmbeddingMode::kNovelty, base_dir, warnings);
  } else {
    std::string known;
    for (const auto& name : kEnvFamilies) known += (known.empty() ? "" : ", ") + name;
    throw std::invalid_argument("unknown environment family '" + family + "' (expected one of " +
                                known + ")");
  }
  if (recipe.contains("temperature") && family != "termdp" && family != "rw") {
    const double eta = recipe.at("temperature").get<double>();
    if (!(eta > 0.0)) throw std::invalid_argument("recipe: temperature must be positive");
    env.temperature = eta;
  }
  env.validate();
  return env;
}

}  // namespace ldc
