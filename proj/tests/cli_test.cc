//
// Copyright 2026 The tirsql Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support/fixtures.h"

namespace tirsql {
namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const std::string command = std::string(TIRSQL_CLI_PATH) + " " + args + " 2>&1";
  CommandResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buffer;
  std::size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.output.append(buffer.data(), n);
  }
  const int status = pclose(pipe);
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::build_fixture_databases(dir_.path() / "db");
    dataset_ = dir_.path() / "dataset.json";
    std::ofstream(dataset_) << testing::fixture_dataset_json();
  }

  std::string common_args(const std::string& out) const {
    return "--db-root " + (dir_.path() / "db").string() + " --dataset " +
           dataset_.string() + " --out-dir " + (dir_.path() / out).string();
  }

  testing::TempDir dir_;
  std::filesystem::path dataset_;
};

TEST_F(CliTest, HelpDocumentsTheReportedDefaults) {
  CommandResult roll = run_cli("rollout --help");
  EXPECT_EQ(roll.exit_code, 0);
  for (const char* needle : {"--max-turns", "6 in the reported setup",
                             "--group-size", "5 in the reported setup",
                             "0.6", "--row-limit", "10", "--api-key-env"}) {
    EXPECT_NE(roll.output.find(needle), std::string::npos) << needle;
  }
  CommandResult toy = run_cli("train-toy --help");
  EXPECT_EQ(toy.exit_code, 0);
  EXPECT_NE(toy.output.find("64 in the reported setup"), std::string::npos);
  EXPECT_NE(toy.output.find("1e-06"), std::string::npos);
}

TEST_F(CliTest, ApiKeyIsNotAcceptedAsAFlag) {
  CommandResult r =
      run_cli("evaluate " + common_args("o") + " --policy mock:oracle --api-key x");
  EXPECT_EQ(r.exit_code, 2);
}

TEST_F(CliTest, MissingDbRootIsAConfigError) {
  CommandResult r = run_cli("filter-data --db-root " +
                            (dir_.path() / "absent").string() + " --dataset " +
                            dataset_.string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("db-root"), std::string::npos);
}

TEST_F(CliTest, BadConfigFileIsAConfigError) {
  std::ofstream(dir_.path() / "cfg.json") << R"({"rollout": {"turns": 3}})";
  CommandResult r = run_cli("filter-data " + common_args("o") + " --config " +
                            (dir_.path() / "cfg.json").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("rollout.turns"), std::string::npos);
}

TEST_F(CliTest, FilterDataWritesKeptAndDropped) {
  CommandResult r = run_cli("filter-data " + common_args("filtered"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto out = dir_.path() / "filtered";
  EXPECT_EQ(count_lines(read_file(out / "kept.jsonl")),
            static_cast<std::size_t>(testing::kFixtureKept));
  const std::string dropped = read_file(out / "dropped.jsonl");
  EXPECT_EQ(count_lines(dropped), 3u);
  EXPECT_NE(dropped.find("\"drop_reason\":\"EmptyResult\""), std::string::npos);
  EXPECT_NE(dropped.find("\"drop_reason\":\"GoldError\""), std::string::npos);
}

TEST_F(CliTest, EvaluateWithOraclePolicyScoresEverything) {
  ASSERT_EQ(run_cli("filter-data " + common_args("filtered")).exit_code, 0);
  const auto kept = dir_.path() / "filtered" / "kept.jsonl";
  CommandResult r = run_cli("evaluate --db-root " +
                            (dir_.path() / "db").string() + " --dataset " +
                            kept.string() + " --out-dir " +
                            (dir_.path() / "eval").string() +
                            " --policy mock:oracle");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  auto report = nlohmann::json::parse(read_file(dir_.path() / "eval" / "report.json"));
  EXPECT_EQ(report["n_samples"], testing::kFixtureKept);
  EXPECT_DOUBLE_EQ(report["ex_percent"].get<double>(), 100.0);
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "eval" / "report.md"));
}

TEST_F(CliTest, ConfigFileIsOverriddenByFlags) {
  std::ofstream(dir_.path() / "cfg.json")
      << R"({"toy": {"steps": 7}, "out_dir": "unused"})";
  CommandResult r = run_cli("train-toy --config " +
                            (dir_.path() / "cfg.json").string() +
                            " --steps 2 --batch-size 2 --out-dir " +
                            (dir_.path() / "toy").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  auto summary =
      nlohmann::json::parse(read_file(dir_.path() / "toy" / "summary.json"));
  EXPECT_EQ(summary["steps"], 2);
  EXPECT_EQ(summary["config"]["toy"]["steps"], 2);
}

TEST_F(CliTest, ZeroStepToyRunWritesHeaderOnly) {
  CommandResult r = run_cli("train-toy --steps 0 --out-dir " +
                            (dir_.path() / "toy0").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(count_lines(read_file(dir_.path() / "toy0" / "curve.csv")), 1u);
}

TEST_F(CliTest, KlOtherThanOffIsRejected) {
  EXPECT_EQ(run_cli("train-toy --steps 0 --kl 0.01 --out-dir " +
                    (dir_.path() / "t").string())
                .exit_code,
            2);
}

TEST_F(CliTest, UnreachablePolicyExitsWithThree) {
  auto records = nlohmann::json::parse(testing::fixture_dataset_json());
  nlohmann::json one = nlohmann::json::array();
  one.push_back(records[0]);
  std::ofstream(dir_.path() / "one.json") << one;
  CommandResult r = run_cli(
      "evaluate --db-root " + (dir_.path() / "db").string() + " --dataset " +
      (dir_.path() / "one.json").string() + " --out-dir " +
      (dir_.path() / "u").string() + " --policy http://127.0.0.1:9");
  EXPECT_EQ(r.exit_code, 3) << r.output;
}

}  // namespace
}  // namespace tirsql
