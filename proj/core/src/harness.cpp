#include "ldc/harness.hpp"

#include "ldc/gen_env.hpp"
#include "ldc/io.hpp"
#include "ldc/oracles.hpp"
#include "ldc/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "format.hpp"

namespace ldc {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

template <typename T>
T config_value(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

const std::set<std::string> kConfigFields = {
    "env",        "agents",      "episodes",         "seeds",        "num_seeds",
    "seed",       "regret",      "bonus_scale",      "radius_scale", "delta",
    "planner",    "output_dir",  "parallelism",      "record_wall_time",
    "cell_time_budget_s",        "write_trajectories", "checkpoint_every"};

}  // namespace

void ExperimentConfig::validate() const {
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (agents.empty()) throw ConfigError("at least one agent is required");
  std::set<std::string> names;
  for (const auto& agent : agents) {
    if (!agent.is_object() || !agent.contains("type")) throw ConfigError("every agent needs a 'type'");
    if (!names.insert(agent_name(agent)).second) {
      throw ConfigError("duplicate agent name '" + agent_name(agent) + "'; set distinct 'name' fields");
    }
  }
  if (!env.is_object()) throw ConfigError("env must be an object with file, inline or recipe");
  if (env.contains("file")) {
    std::filesystem::path path = env.at("file").get<std::string>();
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    if (!std::filesystem::exists(path)) throw ConfigError("env file does not exist: " + path.string());
  }
  if (mc_episodes < 1) throw ConfigError("regret.episodes must be >= 1");
  if (defaults.bonus_scale < 0.0) throw ConfigError("bonus_scale must be nonnegative");
  if (defaults.radius_scale && *defaults.radius_scale < 0.0) {
    throw ConfigError("radius_scale must be nonnegative");
  }
  if (!(defaults.delta > 0.0 && defaults.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (defaults.planner.epsilon < 0.0) throw ConfigError("planner.epsilon must be nonnegative");
  if (parallelism < 0) throw ConfigError("parallelism must be nonnegative");
  if (!(cell_time_budget_s > 0.0)) throw ConfigError("cell_time_budget_s must be positive");
}

ExperimentConfig parse_experiment_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kConfigFields.count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  ExperimentConfig config;
  config.base_dir = base_dir;
  if (!doc.contains("env")) throw ConfigError("config is missing 'env'");
  config.env = doc.at("env").is_string() ? json{{"file", doc.at("env")}} : doc.at("env");
  if (!doc.contains("agents") || !doc.at("agents").is_array()) {
    throw ConfigError("config needs an 'agents' array");
  }
  config.agents = doc.at("agents").get<std::vector<json>>();
  const auto episodes = config_value<std::int64_t>(doc, "episodes", 1);
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  config.episodes = static_cast<std::size_t>(episodes);
  if (doc.contains("seeds")) {
    config.seeds = config_value<std::vector<std::uint64_t>>(doc, "seeds", {});
  } else {
    const auto n = config_value<std::int64_t>(doc, "num_seeds", 1);
    const auto first = config_value<std::uint64_t>(doc, "seed", 0);
    if (n < 1) throw ConfigError("num_seeds must be >= 1");
    config.seeds.clear();
    for (std::int64_t i = 0; i < n; ++i) config.seeds.push_back(first + static_cast<std::uint64_t>(i));
  }
  if (doc.contains("regret")) {
    const json& regret = doc.at("regret");
    const auto mode = config_value<std::string>(regret, "mode", "auto");
    if (mode == "auto") {
      config.regret_mode = RegretMode::kAuto;
    } else if (mode == "exact") {
      config.regret_mode = RegretMode::kExact;
    } else if (mode == "monte-carlo") {
      config.regret_mode = RegretMode::kMonteCarlo;
    } else {
      throw ConfigError("regret.mode must be auto, exact or monte-carlo");
    }
    const auto e = config_value<std::int64_t>(regret, "episodes", 32);
    if (e < 1) throw ConfigError("regret.episodes must be >= 1");
    config.mc_episodes = static_cast<std::size_t>(e);
  }
  config.defaults.bonus_scale = config_value(doc, "bonus_scale", 1.0);
  if (doc.contains("radius_scale")) config.defaults.radius_scale = config_value(doc, "radius_scale", 1.0);
  config.defaults.delta = config_value(doc, "delta", 0.1);
  config.defaults.num_episodes = static_cast<std::int64_t>(config.episodes);
  if (doc.contains("planner")) {
    const json& planner = doc.at("planner");
    try {
      if (planner.contains("backend")) {
        config.defaults.planner.backend = parse_planner_backend(planner.at("backend").get<std::string>());
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    config.defaults.planner.epsilon = config_value(planner, "epsilon", 0.0);
    config.defaults.planner.node_budget =
        config_value<std::size_t>(planner, "node_budget", config.defaults.planner.node_budget);
  }
  if (doc.contains("output_dir")) {
    std::filesystem::path out = config_value<std::string>(doc, "output_dir", "");
    config.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
  }
  config.parallelism = config_value(doc, "parallelism", 0);
  config.record_wall_time = config_value(doc, "record_wall_time", true);
  config.cell_time_budget_s = config_value(doc, "cell_time_budget_s", 600.0);
  config.write_trajectories = config_value(doc, "write_trajectories", false);
  config.checkpoint_every = config_value<std::size_t>(doc, "checkpoint_every", 0);
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return parse_experiment_config(doc, path.parent_path());
}

LogisticDcmdp load_experiment_env(const ExperimentConfig& config, std::vector<std::string>* warnings) {
  const json& spec = config.env;
  try {
    if (spec.contains("file")) {
      std::filesystem::path path = spec.at("file").get<std::string>();
      if (path.is_relative() && !config.base_dir.empty()) path = config.base_dir / path;
      return load_env(path);
    }
    if (spec.contains("inline")) return env_from_json(spec.at("inline"));
    if (spec.contains("recipe")) return generate_env(spec.at("recipe"), config.base_dir, warnings);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
  throw ConfigError("env must contain one of 'file', 'inline' or 'recipe'");
}

// ---------------------------------------------------------------------------
// Running

namespace {

struct CellOutput {
  std::vector<RegretRow> rows;
  std::optional<std::string> failure;
};

std::string safe_name(const std::string& agent) {
  std::string safe;
  for (char c : agent) safe += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
  return safe;
}

std::string file_stem(const std::string& agent, std::uint64_t seed) {
  return safe_name(agent) + "_seed" + std::to_string(seed);
}

CellOutput run_cell(const ExperimentConfig& config, const LogisticDcmdp& env, const json& agent_spec,
                    std::uint64_t seed, double optimal_value, bool exact_values) {
  using clock = std::chrono::steady_clock;
  CellOutput out;
  const std::string name = agent_name(agent_spec);
  const auto cell_start = clock::now();
  std::size_t k = 0;
  try {
    auto agent = make_agent(agent_spec, env, derive_seed(seed, 1), config.defaults);
    std::ofstream trajectories;
    if (config.write_trajectories && !config.output_dir.empty()) {
      const auto dir = config.output_dir / "trajectories";
      std::filesystem::create_directories(dir);
      trajectories.open(dir / (file_stem(name, seed) + ".csv"), std::ios::binary);
      trajectories << kTrajectoryCsvHeader << '\n';
    }
    double cumulative = 0.0;
    for (k = 0; k < config.episodes; ++k) {
      const auto episode_start = clock::now();
      agent->begin_episode(k);
      double policy_value;
      const MixedPolicyFn policy = agent->current_policy();
      if (exact_values) {
        policy_value = evaluate_policy_exact(env, policy);
      } else {
        policy_value = monte_carlo_value(env, policy, config.mc_episodes,
                                         derive_seed(derive_seed(seed, 2), k))
                           .mean;
      }
      Agent& a = *agent;
      const Trajectory trajectory = rollout_episode(
          env, [&a](int h, int s, History history) { return a.act(h, s, history); },
          derive_seed(derive_seed(seed, 3), k),
          [&a](int h, const Step& step, int next_state) { a.observe(h, step, next_state); });
      const double planned = agent->planned_value();
      agent->end_episode(trajectory);
      if (trajectories.is_open()) write_trajectory_rows(trajectories, k + 1, trajectory);
      if (config.checkpoint_every > 0 && !config.output_dir.empty() &&
          (k + 1) % config.checkpoint_every == 0) {
        if (auto* ldc = dynamic_cast<LdcUcbAgent*>(agent.get())) {
          write_text_file(config.output_dir / "checkpoints" /
                              (file_stem(name, seed) + "_ep" + std::to_string(k + 1) + ".json"),
                          estimate_checkpoint_json(k + 1, ldc->estimate(), ldc->model()).dump() + "\n");
        }
      }

      RegretRow row;
      row.agent = name;
      row.seed = seed;
      row.episode = k + 1;
      row.regret = optimal_value - policy_value;
      cumulative += row.regret;
      row.cum_regret = cumulative;
      row.optimistic_value = planned;
      if (config.record_wall_time) {
        row.ms = std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - episode_start).count();
      }
      out.rows.push_back(std::move(row));

      const double elapsed = std::chrono::duration<double>(clock::now() - cell_start).count();
      if (elapsed > config.cell_time_budget_s && k + 1 < config.episodes) {
        std::ostringstream msg;
        msg << "wall-clock budget of " << config.cell_time_budget_s << " s exceeded after episode "
            << k + 1;
        throw std::runtime_error(msg.str());
      }
    }
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << "episode " << k + 1 << ": " << e.what();
    out.failure = msg.str();
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  std::vector<std::string> warnings;
  const LogisticDcmdp env = load_experiment_env(config, &warnings);
  ExperimentResult result = run_experiment(config, env);
  result.warnings.insert(result.warnings.begin(), warnings.begin(), warnings.end());
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const LogisticDcmdp& env) {
  config.validate();
  ExperimentResult result;
  const bool feasible = history_enumeration_feasible(env);
  if (config.regret_mode == RegretMode::kExact && !feasible) {
    throw ConfigError("regret.mode = exact but the history tree of this environment is too large");
  }
  result.exact_policy_values =
      config.regret_mode == RegretMode::kExact || (config.regret_mode == RegretMode::kAuto && feasible);

  result.optimal_value = std::numeric_limits<double>::quiet_NaN();
  try {
    result.optimal_value = feasible ? exact_history_dp(env).value : sigma_augmented_dp(env).value;
  } catch (const SizeLimitError& e) {
    result.warnings.push_back(std::string("no optimal value; regret columns are nan: ") + e.what());
  }

  struct Cell {
    std::size_t agent;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t a = 0; a < config.agents.size(); ++a)
    for (std::uint64_t seed : config.seeds) cells.push_back({a, seed});

  std::vector<CellOutput> outputs(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      outputs[i] = run_cell(config, env, config.agents[cells[i].agent], cells[i].seed,
                            result.optimal_value, result.exact_policy_values);
    }
  };
  std::size_t threads = config.parallelism > 0 ? static_cast<std::size_t>(config.parallelism)
                                               : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cells.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }

  std::vector<std::string> order;
  for (const auto& agent : config.agents) order.push_back(agent_name(agent));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& cell = outputs[i];
    result.rows.insert(result.rows.end(), std::make_move_iterator(cell.rows.begin()),
                       std::make_move_iterator(cell.rows.end()));
    if (cell.failure) result.failures.push_back({order[cells[i].agent], cells[i].seed, *cell.failure});
  }
  result.summary = summarize_regret(result.rows, order);
  return result;
}

std::vector<SummaryRow> summarize_regret(const std::vector<RegretRow>& rows,
                                         const std::vector<std::string>& agent_order) {
  std::map<std::pair<std::string, std::size_t>, std::vector<const RegretRow*>> groups;
  for (const auto& row : rows) groups[{row.agent, row.episode}].push_back(&row);
  std::vector<SummaryRow> out;
  for (const auto& agent : agent_order) {
    for (auto it = groups.lower_bound({agent, 0}); it != groups.end() && it->first.first == agent; ++it) {
      const auto& group = it->second;
      SummaryRow s;
      s.agent = agent;
      s.episode = it->first.second;
      s.num_seeds = group.size();
      double sum = 0.0, sum_regret = 0.0;
      for (const auto* r : group) {
        sum += r->cum_regret;
        sum_regret += r->regret;
      }
      const double n = static_cast<double>(group.size());
      s.mean_cum_regret = sum / n;
      s.mean_regret = sum_regret / n;
      double half = 0.0;
      if (group.size() > 1) {
        double ss = 0.0;
        for (const auto* r : group) ss += (r->cum_regret - s.mean_cum_regret) * (r->cum_regret - s.mean_cum_regret);
        half = 1.96 * std::sqrt(ss / (n - 1.0) / n);
      }
      s.ci_low = s.mean_cum_regret - half;
      s.ci_high = s.mean_cum_regret + half;
      out.push_back(s);
    }
  }
  return out;
}

void write_regret_csv(std::ostream& out, const std::vector<RegretRow>& rows) {
  out << kRegretCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.agent << ',' << r.seed << ',' << r.episode << ',' << format_double(r.regret) << ','
        << format_double(r.cum_regret) << ',' << format_double(r.optimistic_value) << ',' << r.ms
        << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "agent,episode,mean_cum_regret,ci95_low,ci95_high,mean_regret,num_seeds\n";
  for (const auto& s : rows) {
    out << s.agent << ',' << s.episode << ',' << format_double(s.mean_cum_regret) << ','
        << format_double(s.ci_low) << ',' << format_double(s.ci_high) << ','
        << format_double(s.mean_regret) << ',' << s.num_seeds << '\n';
  }
}

void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream csv;
    write_regret_csv(csv, result.rows);
    write_text_file(dir / "regret.csv", csv.str());
  }
  {
    std::ostringstream csv;
    write_summary_csv(csv, result.summary);
    write_text_file(dir / "summary.csv", csv.str());
  }
  std::map<std::string, std::ostringstream> dat;
  for (const auto& s : result.summary) {
    auto& out = dat[s.agent];
    if (out.tellp() == 0) out << "# episode mean_cum_regret ci95_low ci95_high\n";
    out << s.episode << ' ' << format_double(s.mean_cum_regret) << ' ' << format_double(s.ci_low)
        << ' ' << format_double(s.ci_high) << '\n';
  }
  for (const auto& [agent, text] : dat) write_text_file(dir / (safe_name(agent) + ".dat"), text.str());

  json run;
  run["optimal_value"] = result.optimal_value;
  run["exact_policy_values"] = result.exact_policy_values;
  run["episodes"] = config.episodes;
  run["seeds"] = config.seeds;
  run["warnings"] = result.warnings;
  json failures = json::array();
  for (const auto& f : result.failures) {
    failures.push_back({{"agent", f.agent}, {"seed", f.seed}, {"message", f.message}});
  }
  run["failures"] = std::move(failures);
  json finals = json::object();
  for (const auto& s : result.summary) {
    if (s.episode == config.episodes) {
      finals[s.agent] = {{"mean_cum_regret", s.mean_cum_regret},
                         {"ci95", {s.ci_low, s.ci_high}},
                         {"num_seeds", s.num_seeds}};
    }
  }
  run["final"] = std::move(finals);
  write_text_file(dir / "run.json", run.dump(2) + "\n");
}

}  // namespace ldc
