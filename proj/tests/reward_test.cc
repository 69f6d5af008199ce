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

#include "tirsql/reward.h"

#include <gtest/gtest.h>

#include "support/fixtures.h"
#include "tirsql/mock_policy.h"

namespace tirsql {
namespace {

constexpr const char* kGold = "SELECT COUNT(*) FROM t WHERE a <= 4";

Trajectory make_trajectory(bool format_ok, bool executes, bool correct) {
  const std::string sql = !executes  ? "SELECT missing_column FROM t"
                          : correct ? "SELECT 4"
                                    : "SELECT 5";
  std::string answer = answer_turn("final", sql);
  // Stray text keeps the answer extractable but breaks the format.
  if (!format_ok) answer = "preamble " + answer;
  Trajectory t;
  t.db_name = "toy";
  t.messages = {Message::system("s"), Message::user("u"),
                Message::assistant(tool_call_turn("check", "toy", kGold)),
                Message::environment("<tool_response>\nr\n</tool_response>"),
                Message::assistant(answer)};
  t.termination = Termination::kAnswered;
  return t;
}

class RewardTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::build_fixture_databases(dir_.path());
    SandboxConfig cfg;
    cfg.db_root = dir_.path();
    sandbox_ = std::make_unique<Sandbox>(cfg);
  }
  testing::TempDir dir_;
  std::unique_ptr<Sandbox> sandbox_;
};

TEST_F(RewardTest, TableOfComponents) {
  struct Row {
    bool format_ok, executes, correct;
    double r_format, r_exec, r_result;
  };
  // Written out by hand; the gated cells are 0.
  const Row table[] = {
      {true, true, true, 0.1, 0.1, 1.0},
      {true, true, false, 0.1, 0.1, -1.0},
      {true, false, true, 0.1, -0.1, 0.0},
      {true, false, false, 0.1, -0.1, 0.0},
      {false, true, true, -0.1, 0.0, 0.0},
      {false, true, false, -0.1, 0.0, 0.0},
      {false, false, true, -0.1, 0.0, 0.0},
      {false, false, false, -0.1, 0.0, 0.0},
  };
  for (const Row& row : table) {
    Trajectory t = make_trajectory(row.format_ok, row.executes, row.correct);
    RewardBreakdown r = total_reward(t, kGold, *sandbox_, {});
    SCOPED_TRACE(::testing::Message() << row.format_ok << row.executes
                                      << row.correct);
    EXPECT_EQ(r.r_format, row.r_format);
    EXPECT_EQ(r.r_exec, row.r_exec);
    EXPECT_EQ(r.r_result, row.r_result);
    EXPECT_EQ(r.total, row.r_format + row.r_exec + row.r_result);
    EXPECT_EQ(format_reward(t, {}), row.r_format);
    EXPECT_EQ(execution_reward(t, *sandbox_, {}), row.r_exec);
    EXPECT_EQ(result_reward(t, kGold, *sandbox_, {}), row.r_result);
    RewardBreakdown c = compose_reward(row.format_ok, row.executes, row.correct, {});
    EXPECT_EQ(c.total, r.total);
    EXPECT_EQ(c.answer_executes, r.answer_executes);
  }
}

TEST_F(RewardTest, MissingAnswerFailsFormat) {
  Trajectory t = make_trajectory(true, true, true);
  t.messages.pop_back();
  t.messages.pop_back();
  RewardBreakdown r = total_reward(t, kGold, *sandbox_, {});
  EXPECT_EQ(r.r_format, -0.1);
  EXPECT_EQ(r.total, -0.1);
  EXPECT_FALSE(r.answer_executes);
}

TEST_F(RewardTest, DetailsExplainTheScore) {
  RewardBreakdown r =
      total_reward(make_trajectory(true, false, false), kGold, *sandbox_, {});
  ASSERT_FALSE(r.details.empty());
  EXPECT_TRUE(r.details[0].starts_with("exec:SqlError: "));
  r = total_reward(make_trajectory(true, true, false), kGold, *sandbox_, {});
  EXPECT_EQ(r.details, std::vector<std::string>{"result:mismatch"});
}

TEST_F(RewardTest, GoldFailureThrows) {
  EXPECT_THROW(total_reward(make_trajectory(true, true, true),
                            "SELECT nope FROM t", *sandbox_, {}),
               GoldExecutionFailed);
}

TEST_F(RewardTest, ScaledMagnitudes) {
  RewardConfig cfg{0.5, 0.25, 2.0};
  RewardBreakdown r =
      total_reward(make_trajectory(true, true, false), kGold, *sandbox_, cfg);
  EXPECT_EQ(r.total, 0.5 + 0.25 - 2.0);
  cfg.exec_magnitude = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(OrderSensitive, TopLevelOnly) {
  EXPECT_TRUE(order_sensitive("SELECT a FROM t ORDER BY a"));
  EXPECT_TRUE(order_sensitive("select a from t order\n  by a desc"));
  EXPECT_FALSE(order_sensitive("SELECT a FROM t"));
  EXPECT_FALSE(order_sensitive("SELECT a FROM (SELECT a FROM t ORDER BY a)"));
  EXPECT_FALSE(order_sensitive("SELECT 'ORDER BY' FROM t"));
  EXPECT_FALSE(order_sensitive("SELECT a FROM t -- ORDER BY a"));
  EXPECT_FALSE(order_sensitive("SELECT \"order by\" FROM t"));
  EXPECT_FALSE(order_sensitive("SELECT a AS reorder, by_x FROM t"));
}

QueryResult result(std::vector<std::string> cols, std::vector<Row> rows) {
  QueryResult r;
  r.columns = std::move(cols);
  r.rows = std::move(rows);
  return r;
}

TEST(ResultsEqual, MultisetAndOrder) {
  QueryResult a = result({"x"}, {{std::int64_t{1}}, {std::int64_t{2}}});
  QueryResult b = result({"y"}, {{std::int64_t{2}}, {std::int64_t{1}}});
  EXPECT_TRUE(results_equal(a, b, false));
  EXPECT_FALSE(results_equal(a, b, true));
  QueryResult dup = result({"x"}, {{std::int64_t{1}}, {std::int64_t{1}}});
  EXPECT_FALSE(results_equal(a, dup, false));
  QueryResult wide = result({"x", "z"}, {{std::int64_t{1}, std::int64_t{1}}});
  EXPECT_FALSE(results_equal(result({"x"}, {{std::int64_t{1}}}), wide, false));
}

TEST(ResultsEqual, NumericNormalization) {
  EXPECT_TRUE(results_equal(result({"x"}, {{4.0}}),
                            result({"x"}, {{std::int64_t{4}}}), false));
  EXPECT_FALSE(results_equal(result({"x"}, {{4.5}}),
                             result({"x"}, {{std::int64_t{4}}}), false));
  EXPECT_FALSE(results_equal(result({"x"}, {{std::string("4")}}),
                             result({"x"}, {{std::int64_t{4}}}), false));
  EXPECT_TRUE(results_equal(result({"x"}, {{std::monostate{}}}),
                            result({"x"}, {{std::monostate{}}}), false));
}

}  // namespace
}  // namespace tirsql
