#include "ldc/io.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ldc {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli.log";
  const std::string command = std::string("\"") + LDC_CLI_PATH + "\" " + args + " > \"" +
                              log.string() + "\" 2>&1";
  const int status = std::system(command.c_str());
  CliResult result;
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream text;
  text << in.rdbuf();
  result.out = text.str();
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

TEST(Cli, GenEnvIsByteReproducible) {
  const fs::path dir = testing::scratch_dir("cli_gen");
  const std::string recipe = "'{\"family\": \"random-logistic\", \"seed\": 9, \"horizon\": 3}'";
  ASSERT_EQ(run_cli("gen-env " + recipe + " -o " + (dir / "a.json").string(), dir).code, 0);
  ASSERT_EQ(run_cli("gen-env " + recipe + " -o " + (dir / "b.json").string(), dir).code, 0);
  EXPECT_EQ(read_file(dir / "a.json"), read_file(dir / "b.json"));
  const CliResult ok = run_cli("validate " + (dir / "a.json").string(), dir);
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("ok: S="), std::string::npos) << ok.out;
}

TEST(Cli, ConfigErrorsExitWithTwo) {
  const fs::path dir = testing::scratch_dir("cli_config");
  EXPECT_EQ(run_cli("run " + (dir / "missing.json").string(), dir).code, 2);
  write_file(dir / "bad.json", "{\"env\": {\"recipe\": {\"family\": \"markov\"}}, \"agents\": [], \"episodes\": 2}");
  EXPECT_EQ(run_cli("run " + (dir / "bad.json").string(), dir).code, 2);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("gen-env '{\"family\": \"nope\"}' -o " + (dir / "x.json").string(), dir).code, 2);
  write_file(dir / "broken_env.json", "{\"schema_version\": 1}");
  EXPECT_EQ(run_cli("validate " + (dir / "broken_env.json").string(), dir).code, 2);
}

TEST(Cli, RunWritesOutputsAndFlagsOverride) {
  const fs::path dir = testing::scratch_dir("cli_run");
  write_file(dir / "exp.json",
             "{\"env\": {\"recipe\": {\"family\": \"markov\", \"seed\": 1}},"
             " \"agents\": [{\"type\": \"ldc_ucb\"}, {\"type\": \"random\"}],"
             " \"episodes\": 4, \"seeds\": [1, 2], \"bonus_scale\": 0.1}");
  const CliResult first =
      run_cli("run --no-wall-time --out-dir " + (dir / "a").string() + " " + (dir / "exp.json").string(), dir);
  ASSERT_EQ(first.code, 0) << first.out;
  EXPECT_TRUE(fs::exists(dir / "a" / "regret.csv"));
  EXPECT_TRUE(fs::exists(dir / "a" / "summary.csv"));
  const CliResult second = run_cli(
      "run --no-wall-time --parallelism 2 --out-dir " + (dir / "b").string() + " " + (dir / "exp.json").string(),
      dir);
  ASSERT_EQ(second.code, 0) << second.out;
  EXPECT_EQ(read_file(dir / "a" / "regret.csv"), read_file(dir / "b" / "regret.csv"));
  const CliResult shifted = run_cli(
      "run --no-wall-time --seed 7 --out-dir " + (dir / "c").string() + " " + (dir / "exp.json").string(), dir);
  ASSERT_EQ(shifted.code, 0) << shifted.out;
  EXPECT_NE(read_file(dir / "c" / "regret.csv").find("random,8,"), std::string::npos);
}

TEST(Cli, FailedCellsExitWithThree) {
  const fs::path dir = testing::scratch_dir("cli_partial");
  write_file(dir / "exp.json",
             "{\"env\": {\"recipe\": {\"family\": \"random-logistic\", \"seed\": 1, \"horizon\": 4}},"
             " \"agents\": [{\"type\": \"ldc_ucb\", \"planner\": {\"node_budget\": 3}}, {\"type\": \"random\"}],"
             " \"episodes\": 2, \"seeds\": [1], \"output_dir\": \"out\"}");
  const CliResult result = run_cli("run " + (dir / "exp.json").string(), dir);
  EXPECT_EQ(result.code, 3) << result.out;
  EXPECT_NE(result.out.find("cell failed: agent ldc_ucb"), std::string::npos) << result.out;
  EXPECT_TRUE(fs::exists(dir / "out" / "regret.csv"));
}

TEST(Cli, KappaReportsAnEstimate) {
  const fs::path dir = testing::scratch_dir("cli_kappa");
  ASSERT_EQ(run_cli("gen-env '{\"family\": \"markov\", \"seed\": 2}' -o " + (dir / "env.json").string(), dir).code,
            0);
  const CliResult result = run_cli("kappa --samples 200 " + (dir / "env.json").string(), dir);
  EXPECT_EQ(result.code, 0) << result.out;
  EXPECT_NE(result.out.find("kappa "), std::string::npos) << result.out;
}

}  // namespace
}  // namespace ldc
