#pragma once

#include "ldc/dcmdp.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace ldc {

inline constexpr int kEnvSchemaVersion = 1;

/// Environment document. Field names follow LogisticDcmdp; nested arrays:
/// rewards [M+1][S][A], transitions [M+1][S][A][S],
/// latent_features [H][S][A][M+1][M], feature_bounds [H][M].
nlohmann::json env_to_json(const LogisticDcmdp& env);

/// Parses and validates an environment document. Throws std::invalid_argument
/// on schema or invariant violations.
LogisticDcmdp env_from_json(const nlohmann::json& doc);

/// Serializes with a fixed layout; identical environments give identical bytes.
std::string dump_env(const LogisticDcmdp& env);

void save_env(const LogisticDcmdp& env, const std::filesystem::path& path);
LogisticDcmdp load_env(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ldc
