#pragma once

#include "ldc/agents.hpp"
#include "ldc/dcmdp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ldc {

/// Raised for invalid experiment configurations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class RegretMode {
  kAuto,        // exact when the history tree fits the budget, else Monte-Carlo
  kExact,
  kMonteCarlo,
};

/// Experiment document fields:
///   env: {"file": path} | {"inline": env document} | {"recipe": gen-env recipe}
///   agents: [agent documents], episodes: K, seeds: [..] (or num_seeds + seed)
///   regret: {"mode": auto|exact|monte-carlo, "episodes": E}
///   bonus_scale, radius_scale, delta, planner: {backend, epsilon, node_budget}
///   output_dir, parallelism, record_wall_time, cell_time_budget_s,
///   write_trajectories, checkpoint_every
struct ExperimentConfig {
  nlohmann::json env;
  std::filesystem::path base_dir;
  std::vector<nlohmann::json> agents;
  std::size_t episodes = 1;
  std::vector<std::uint64_t> seeds{0};
  RegretMode regret_mode = RegretMode::kAuto;
  std::size_t mc_episodes = 32;
  AgentDefaults defaults;
  std::filesystem::path output_dir;
  int parallelism = 0;  // 0: hardware concurrency
  bool record_wall_time = true;
  double cell_time_budget_s = 600.0;
  bool write_trajectories = false;
  std::size_t checkpoint_every = 0;

  /// Throws ConfigError on invalid values.
  void validate() const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Resolves the env section to an environment.
LogisticDcmdp load_experiment_env(const ExperimentConfig& config,
                                  std::vector<std::string>* warnings = nullptr);

struct RegretRow {
  std::string agent;
  std::uint64_t seed = 0;
  std::size_t episode = 0;  // 1-based
  double regret = 0.0;
  double cum_regret = 0.0;
  double optimistic_value = 0.0;
  std::int64_t ms = 0;
};

struct CellFailure {
  std::string agent;
  std::uint64_t seed = 0;
  std::string message;
};

struct SummaryRow {
  std::string agent;
  std::size_t episode = 0;
  double mean_cum_regret = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double mean_regret = 0.0;
  std::size_t num_seeds = 0;
};

struct ExperimentResult {
  double optimal_value = 0.0;  // NaN when no oracle could be computed
  bool exact_policy_values = false;
  std::vector<RegretRow> rows;         // ordered by (agent, seed, episode) as configured
  std::vector<CellFailure> failures;
  std::vector<SummaryRow> summary;     // ordered by (agent, episode)
  std::vector<std::string> warnings;
};

inline constexpr const char* kRegretCsvHeader =
    "agent,seed,episode,regret,cum_regret,optimistic_value,ms";

/// Runs every (agent, seed) cell over K episodes. Cells run on a worker pool;
/// results are merged by cell key, so the output does not depend on scheduling.
/// Failures are recorded per cell and do not stop the other cells.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const LogisticDcmdp& env);

/// Mean +- 1.96 standard errors over seeds of cumulative regret per episode.
std::vector<SummaryRow> summarize_regret(const std::vector<RegretRow>& rows,
                                         const std::vector<std::string>& agent_order);

void write_regret_csv(std::ostream& out, const std::vector<RegretRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Writes regret.csv, summary.csv, one <agent>.dat per agent and run.json into dir.
void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                              const std::filesystem::path& dir);

}  // namespace ldc
