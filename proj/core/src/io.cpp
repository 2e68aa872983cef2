#include "ldc/io.hpp"

#include <fstream>
#include <sstream>

namespace ldc {

using nlohmann::json;

namespace {

const json& field(const json& doc, const char* name) {
  if (!doc.contains(name)) {
    throw std::invalid_argument(std::string("environment document is missing field '") + name + "'");
  }
  return doc.at(name);
}

void expect_size(const json& node, std::size_t n, const std::string& what) {
  if (!node.is_array() || node.size() != n) {
    std::ostringstream msg;
    msg << what << ": expected an array of " << n << " entries";
    throw std::invalid_argument(msg.str());
  }
}

double number(const json& node, const std::string& what) {
  if (!node.is_number()) throw std::invalid_argument(what + ": expected a number");
  return node.get<double>();
}

}  // namespace

json env_to_json(const LogisticDcmdp& env) {
  const int S = env.num_states, A = env.num_actions, X = env.num_contexts(),
            M = env.num_free_contexts, H = env.horizon;
  json rewards = json::array();
  json transitions = json::array();
  for (int x = 0; x < X; ++x) {
    json rx = json::array(), px = json::array();
    for (int s = 0; s < S; ++s) {
      json rs = json::array(), ps = json::array();
      for (int a = 0; a < A; ++a) {
        rs.push_back(env.reward(x, s, a));
        const auto row = env.transition(x, s, a);
        ps.push_back(json(std::vector<double>(row.begin(), row.end())));
      }
      rx.push_back(std::move(rs));
      px.push_back(std::move(ps));
    }
    rewards.push_back(std::move(rx));
    transitions.push_back(std::move(px));
  }
  json features = json::array();
  json bounds = json::array();
  for (int h = 0; h < H; ++h) {
    json fh = json::array();
    for (int s = 0; s < S; ++s) {
      json fs = json::array();
      for (int a = 0; a < A; ++a) {
        json fa = json::array();
        for (int x = 0; x < X; ++x) {
          const auto f = env.latent_features.cell(h, s, a, x);
          fa.push_back(json(std::vector<double>(f.data(), f.data() + M)));
        }
        fs.push_back(std::move(fa));
      }
      fh.push_back(std::move(fs));
    }
    features.push_back(std::move(fh));
    bounds.push_back(json(std::vector<double>(env.feature_bounds.begin() + h * M,
                                              env.feature_bounds.begin() + (h + 1) * M)));
  }
  json doc;
  doc["schema_version"] = kEnvSchemaVersion;
  doc["num_states"] = S;
  doc["num_actions"] = A;
  doc["num_free_contexts"] = M;
  doc["horizon"] = H;
  doc["rewards"] = std::move(rewards);
  doc["transitions"] = std::move(transitions);
  doc["latent_features"] = std::move(features);
  doc["history_discount"] = env.history_discount;
  doc["temperature"] = env.temperature;
  doc["feature_bounds"] = std::move(bounds);
  doc["feature_norm_bound"] = env.feature_norm_bound;
  doc["initial_state"] = env.initial_state;
  return doc;
}

LogisticDcmdp env_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("environment document must be an object");
  const int version = field(doc, "schema_version").get<int>();
  if (version != kEnvSchemaVersion) {
    throw std::invalid_argument("unsupported environment schema_version " + std::to_string(version));
  }
  const int S = field(doc, "num_states").get<int>();
  const int A = field(doc, "num_actions").get<int>();
  const int M = field(doc, "num_free_contexts").get<int>();
  const int H = field(doc, "horizon").get<int>();
  const double alpha = number(field(doc, "history_discount"), "history_discount");
  LogisticDcmdp env = make_empty_dcmdp(S, A, M, H, alpha);
  const int X = M + 1;
  env.temperature = number(field(doc, "temperature"), "temperature");
  env.initial_state = field(doc, "initial_state").get<int>();
  if (doc.contains("feature_norm_bound")) {
    env.feature_norm_bound = number(doc.at("feature_norm_bound"), "feature_norm_bound");
  }

  const json& rewards = field(doc, "rewards");
  const json& transitions = field(doc, "transitions");
  expect_size(rewards, X, "rewards");
  expect_size(transitions, X, "transitions");
  for (int x = 0; x < X; ++x) {
    expect_size(rewards[x], S, "rewards[x]");
    expect_size(transitions[x], S, "transitions[x]");
    for (int s = 0; s < S; ++s) {
      expect_size(rewards[x][s], A, "rewards[x][s]");
      expect_size(transitions[x][s], A, "transitions[x][s]");
      for (int a = 0; a < A; ++a) {
        env.reward(x, s, a) = number(rewards[x][s][a], "rewards");
        const json& row = transitions[x][s][a];
        expect_size(row, S, "transitions[x][s][a]");
        auto out = env.transition(x, s, a);
        for (int n = 0; n < S; ++n) out[n] = number(row[n], "transitions");
      }
    }
  }
  const json& features = field(doc, "latent_features");
  const json& bounds = field(doc, "feature_bounds");
  expect_size(features, H, "latent_features");
  expect_size(bounds, H, "feature_bounds");
  for (int h = 0; h < H; ++h) {
    expect_size(bounds[h], M, "feature_bounds[h]");
    for (int i = 0; i < M; ++i) env.feature_bounds[h * M + i] = number(bounds[h][i], "feature_bounds");
    expect_size(features[h], S, "latent_features[h]");
    for (int s = 0; s < S; ++s) {
      expect_size(features[h][s], A, "latent_features[h][s]");
      for (int a = 0; a < A; ++a) {
        expect_size(features[h][s][a], X, "latent_features[h][s][a]");
        for (int x = 0; x < X; ++x) {
          const json& f = features[h][s][a][x];
          expect_size(f, M, "latent_features[h][s][a][x]");
          auto cell = env.latent_features.cell(h, s, a, x);
          for (int i = 0; i < M; ++i) cell[i] = number(f[i], "latent_features");
        }
      }
    }
  }
  env.validate();
  return env;
}

std::string dump_env(const LogisticDcmdp& env) { return env_to_json(env).dump() + "\n"; }

void save_env(const LogisticDcmdp& env, const std::filesystem::path& path) {
  write_text_file(path, dump_env(env));
}

LogisticDcmdp load_env(const std::filesystem::path& path) { return env_from_json(read_json_file(path)); }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace ldc
