// Command-line front end: experiments, environment generation and utilities.

#include "ldc/embedding.hpp"
#include "ldc/gen_env.hpp"
#include "ldc/harness.hpp"
#include "ldc/io.hpp"
#include "ldc/special_cases.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> parallelism;
  std::optional<double> bonus_scale;
  std::optional<std::string> planner;
  std::optional<double> epsilon;
  bool no_wall_time = false;
};

nlohmann::json parse_inline_or_file(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') {
    try {
      return nlohmann::json::parse(arg);
    } catch (const nlohmann::json::parse_error& e) {
      throw ldc::ConfigError(std::string("inline JSON: ") + e.what());
    }
  }
  return ldc::read_json_file(arg);
}

int cmd_run(const std::string& config_path, const GlobalFlags& flags) {
  ldc::ExperimentConfig config = ldc::load_experiment_config(config_path);
  if (flags.seed) {
    const std::size_t n = config.seeds.size();
    config.seeds.clear();
    for (std::size_t i = 0; i < n; ++i) config.seeds.push_back(*flags.seed + i);
  }
  if (flags.out_dir) config.output_dir = *flags.out_dir;
  if (flags.parallelism) config.parallelism = *flags.parallelism;
  if (flags.bonus_scale) config.defaults.bonus_scale = *flags.bonus_scale;
  if (flags.planner) config.defaults.planner.backend = ldc::parse_planner_backend(*flags.planner);
  if (flags.epsilon) config.defaults.planner.epsilon = *flags.epsilon;
  if (flags.no_wall_time) config.record_wall_time = false;
  config.validate();
  if (config.output_dir.empty()) config.output_dir = "ldc-out";

  const ldc::ExperimentResult result = ldc::run_experiment(config);
  ldc::write_experiment_outputs(result, config, config.output_dir);
  for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << '\n';
  for (const auto& s : result.summary) {
    if (s.episode == config.episodes) {
      std::cout << s.agent << ": cumulative regret at K=" << s.episode << " = " << s.mean_cum_regret
                << " [" << s.ci_low << ", " << s.ci_high << "] over " << s.num_seeds << " seeds\n";
    }
  }
  std::cout << "wrote " << (config.output_dir / "regret.csv").string() << '\n';
  for (const auto& f : result.failures) {
    std::cerr << "cell failed: agent " << f.agent << " seed " << f.seed << ": " << f.message << '\n';
  }
  return result.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_gen_env(const std::string& recipe_arg, const std::string& output, const GlobalFlags& flags) {
  nlohmann::json recipe = parse_inline_or_file(recipe_arg);
  if (flags.seed) recipe["seed"] = *flags.seed;
  std::vector<std::string> warnings;
  std::filesystem::path base;
  if (recipe_arg.empty() || recipe_arg.front() != '{') base = std::filesystem::path(recipe_arg).parent_path();
  const ldc::LogisticDcmdp env = ldc::generate_env(recipe, base, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  ldc::save_env(env, output);
  std::cout << "wrote " << output << " (S=" << env.num_states << " A=" << env.num_actions
            << " M=" << env.num_free_contexts << " H=" << env.horizon << ")\n";
  return kExitOk;
}

int cmd_kappa(const std::string& env_path, std::size_t samples, const GlobalFlags& flags) {
  const ldc::LogisticDcmdp env = ldc::load_env(env_path);
  const auto estimate = ldc::estimate_kappa(env, samples, flags.seed.value_or(0));
  std::cout << "kappa " << estimate.kappa << "\nmin_eigenvalue " << estimate.min_eigenvalue
            << "\npoints " << estimate.points_evaluated << "\ncorners_enumerated "
            << (estimate.corners_enumerated ? "yes" : "no (M > 20, sampling only)") << '\n';
  return kExitOk;
}

int cmd_embed(const std::string& ratings_path, int rank, int iters, const std::string& output,
              const GlobalFlags& flags) {
  const ldc::RatingsMatrix ratings = ldc::load_ratings(ratings_path);
  const ldc::TruncatedSvd svd = ldc::truncated_svd(ratings.ratings, rank, iters, flags.seed.value_or(0));
  ldc::write_text_file(output, ldc::embedding_cache_json(ratings, svd).dump() + "\n");
  std::cout << "users " << ratings.user_ids.size() << ", items " << ratings.item_ids.size()
            << ", ratings " << ratings.ratings.nonZeros() << ", duplicates " << ratings.duplicates
            << "\nwrote " << output << '\n';
  return kExitOk;
}

int cmd_validate(const std::string& env_path) {
  const ldc::LogisticDcmdp env = ldc::load_env(env_path);
  std::cout << "ok: S=" << env.num_states << " A=" << env.num_actions
            << " M=" << env.num_free_contexts << " H=" << env.horizon
            << " alpha=" << env.history_discount << " eta=" << env.temperature << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logistic dynamic contextual MDPs: experiments and tools"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--seed", flags.seed, "Base seed")->envname("LDC_SEED");
  app.add_option("--out-dir", flags.out_dir, "Output directory")->envname("LDC_OUT_DIR");
  app.add_option("--parallelism", flags.parallelism, "Worker threads (0 = all cores)")
      ->envname("LDC_PARALLELISM");
  app.add_option("--bonus-scale", flags.bonus_scale, "Multiplier on bonuses and radii")
      ->envname("LDC_BONUS_SCALE");
  app.add_option("--planner", flags.planner, "Planner backend")
      ->check(CLI::IsMember({"exact", "quantized"}))
      ->envname("LDC_PLANNER");
  app.add_option("--epsilon", flags.epsilon, "Quantized planner grid width")->envname("LDC_EPSILON");
  app.add_flag("--no-wall-time", flags.no_wall_time, "Write ms = 0 for reproducible logs")
      ->envname("LDC_NO_WALL_TIME");

  std::string config_path, recipe, output, env_path, ratings_path;
  std::size_t samples = 10000;
  int rank = 20, iters = 4;

  auto* run = app.add_subcommand("run", "Run a regret experiment");
  run->add_option("config", config_path, "Experiment JSON")->required();
  auto* gen = app.add_subcommand("gen-env", "Generate an environment from a recipe");
  gen->add_option("recipe", recipe, "Recipe JSON file or inline JSON object")->required();
  gen->add_option("-o,--output", output, "Environment file to write")->required();
  auto* kappa = app.add_subcommand("kappa", "Estimate the saturation constant kappa");
  kappa->add_option("env", env_path, "Environment JSON")->required();
  kappa->add_option("--samples", samples, "Uniform samples in the reachable box")
      ->envname("LDC_SAMPLES");
  auto* embed = app.add_subcommand("embed", "Embed a ratings CSV by truncated SVD");
  embed->add_option("ratings", ratings_path, "Ratings CSV")->required();
  embed->add_option("-d,--rank", rank, "Embedding dimension")->envname("LDC_RANK");
  embed->add_option("--iters", iters, "Power iterations")->envname("LDC_ITERS");
  embed->add_option("-o,--output", output, "Embedding cache to write")->required();
  auto* validate = app.add_subcommand("validate", "Check an environment file");
  validate->add_option("env", env_path, "Environment JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, flags);
    if (*gen) return cmd_gen_env(recipe, output, flags);
    if (*kappa) return cmd_kappa(env_path, samples, flags);
    if (*embed) return cmd_embed(ratings_path, rank, iters, output, flags);
    if (*validate) return cmd_validate(env_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
