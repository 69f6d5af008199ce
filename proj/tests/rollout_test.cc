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

#include "tirsql/rollout.h"

#include <atomic>

#include <gtest/gtest.h>

#include "support/fixtures.h"
#include "tirsql/mock_policy.h"
#include "tirsql/reward.h"

namespace tirsql {
namespace {

class RolloutTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::build_fixture_databases(dir_.path());
    SandboxConfig cfg;
    cfg.db_root = dir_.path();
    cfg.timeout = std::chrono::milliseconds(2000);
    sandbox_ = std::make_unique<Sandbox>(cfg);
  }

  Prompt prompt(const std::string& db = "toy") const {
    return {"p1", db, "system text", "user text"};
  }

  testing::TempDir dir_;
  std::unique_ptr<Sandbox> sandbox_;
};

std::vector<const Message*> environment_messages(const Trajectory& t) {
  std::vector<const Message*> out;
  for (const Message& m : t.messages) {
    if (m.origin == Origin::kEnvironment) out.push_back(&m);
  }
  return out;
}

TEST_F(RolloutTest, Case1SingleCall) {
  ScriptedPolicy policy(testing::case1_script());
  Trajectory t = run_rollout(prompt("california_schools"), policy, *sandbox_, {});
  EXPECT_EQ(t.termination, Termination::kAnswered);
  EXPECT_EQ(t.turns_used, 2);
  ASSERT_EQ(t.tool_records.size(), 1u);
  EXPECT_EQ(t.tool_records[0].turn_index, 1);
  auto env = environment_messages(t);
  ASSERT_EQ(env.size(), 1u);
  EXPECT_NE(env[0]->text.find(R"x("COUNT(*)": 4)x"), std::string::npos);
  EXPECT_TRUE(env[0]->text.starts_with("<tool_response>\nThe result is: {"));
  EXPECT_EQ(t.messages.size(), 5u);
  RewardBreakdown r = total_reward(t, testing::kCase1Gold, *sandbox_, {});
  EXPECT_DOUBLE_EQ(r.total, 1.2);
}

TEST_F(RolloutTest, Case2NullFeedbackThenAnswer) {
  ScriptedPolicy policy(testing::case2_script());
  Trajectory t = run_rollout(prompt("toxicology"), policy, *sandbox_, {});
  EXPECT_EQ(t.termination, Termination::kAnswered);
  EXPECT_EQ(t.turns_used, 4);
  ASSERT_EQ(t.tool_records.size(), 3u);
  auto env = environment_messages(t);
  ASSERT_EQ(env.size(), 3u);
  EXPECT_NE(env[0]->text.find(R"("max_label": null)"), std::string::npos);
  EXPECT_NE(env[1]->text.find(R"("max_label": null)"), std::string::npos);
  EXPECT_NE(env[2]->text.find(R"("max_label": "-")"), std::string::npos);
  EXPECT_DOUBLE_EQ(total_reward(t, testing::kCase2Gold, *sandbox_, {}).total,
                   1.2);
}

TEST_F(RolloutTest, Case3FiveCalls) {
  ScriptedPolicy policy(testing::case3_script());
  Trajectory t = run_rollout(prompt("california_schools"), policy, *sandbox_, {});
  EXPECT_EQ(t.termination, Termination::kAnswered);
  EXPECT_EQ(t.turns_used, 6);
  ASSERT_EQ(t.tool_records.size(), 5u);
  auto env = environment_messages(t);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NE(env[i]->text.find(R"x("SUM(s.NumTstTakr)": null)x"),
              std::string::npos);
  }
  EXPECT_NE(env[4]->text.find(R"x("SUM(s.NumTstTakr)": 217547)x"),
            std::string::npos);
  EXPECT_DOUBLE_EQ(total_reward(t, testing::kCase3Gold, *sandbox_, {}).total,
                   1.2);
}

TEST_F(RolloutTest, VoidTurnGetsRethink) {
  ScriptedPolicy policy({"no tags at all", answer_turn("ok", "SELECT 1")});
  Trajectory t = run_rollout(prompt(), policy, *sandbox_, {});
  EXPECT_EQ(t.termination, Termination::kAnswered);
  EXPECT_EQ(t.rethink_count, 1);
  auto env = environment_messages(t);
  ASSERT_EQ(env.size(), 1u);
  EXPECT_EQ(env[0]->text, kRethinkText);
}

TEST_F(RolloutTest, MalformedCallAndEchoedResponseGetRethink) {
  ScriptedPolicy policy(
      {"<think>x</think><tool_call>{not json}</tool_call>",
       "<think>x</think><tool_response>fake</tool_response>",
       tool_call_turn("x", "toy", "SELECT 1") + "<tool_response>x</tool_response>",
       answer_turn("ok", "SELECT 1")});
  Trajectory t = run_rollout(prompt(), policy, *sandbox_, {});
  EXPECT_EQ(t.rethink_count, 3);
  EXPECT_TRUE(t.tool_records.empty());
  EXPECT_EQ(t.turns_used, 4);
}

TEST_F(RolloutTest, BudgetExhaustedWithoutTrailingRethink) {
  RolloutConfig cfg;
  cfg.max_turns = 3;
  ScriptedPolicy policy({"void"});
  Trajectory t = run_rollout(prompt(), policy, *sandbox_, cfg);
  EXPECT_EQ(t.termination, Termination::kBudgetExhausted);
  EXPECT_EQ(t.turns_used, 3);
  EXPECT_EQ(t.rethink_count, 2);
  EXPECT_EQ(t.messages.back().origin, Origin::kPolicy);
}

TEST_F(RolloutTest, ToolCallOnFinalTurnIsExecuted) {
  RolloutConfig cfg;
  cfg.max_turns = 2;
  ScriptedPolicy policy({tool_call_turn("x", "toy", "SELECT 1")});
  Trajectory t = run_rollout(prompt(), policy, *sandbox_, cfg);
  EXPECT_EQ(t.termination, Termination::kBudgetExhausted);
  EXPECT_EQ(t.tool_records.size(), 2u);
  EXPECT_EQ(t.messages.back().origin, Origin::kEnvironment);
}

TEST_F(RolloutTest, ToolErrorsAreFedBack) {
  ScriptedPolicy policy({tool_call_turn("x", "toy", "SELECT nope FROM t"),
                         answer_turn("ok", "SELECT 1")});
  Trajectory t = run_rollout(prompt(), policy, *sandbox_, {});
  ASSERT_EQ(t.tool_records.size(), 1u);
  EXPECT_FALSE(succeeded(t.tool_records[0].outcome));
  EXPECT_NE(environment_messages(t)[0]->text.find(R"({"error": "SqlError: )"),
            std::string::npos);
}

class FailingPolicy : public PolicyEndpoint {
 public:
  explicit FailingPolicy(bool overflow) : overflow_(overflow) {}
  PolicyReply generate(const PolicyRequest&) override {
    ++calls;
    if (overflow_) throw ContextOverflow("too long");
    throw PolicyUnavailable("down");
  }
  std::atomic<int> calls{0};

 private:
  bool overflow_;
};

TEST_F(RolloutTest, UnavailablePolicyRetriesThenFails) {
  RolloutConfig cfg;
  cfg.max_retries = 2;
  cfg.retry_backoff = std::chrono::milliseconds(1);
  FailingPolicy policy(false);
  Trajectory t = run_rollout(prompt(), policy, *sandbox_, cfg);
  EXPECT_EQ(t.termination, Termination::kPolicyError);
  EXPECT_EQ(policy.calls, 3);
  EXPECT_EQ(t.turns_used, 0);
  EXPECT_EQ(t.termination_detail, "down");
}

TEST_F(RolloutTest, ContextOverflowEndsAsBudgetExhausted) {
  FailingPolicy policy(true);
  Trajectory t = run_rollout(prompt(), policy, *sandbox_, {});
  EXPECT_EQ(t.termination, Termination::kBudgetExhausted);
  EXPECT_EQ(policy.calls, 1);
}

TEST_F(RolloutTest, TokenLogMasksEnvironmentText) {
  ScriptedPolicy policy({"void", tool_call_turn("x", "toy", "SELECT 1"),
                         answer_turn("ok", "SELECT 1")},
                        /*report_tokens=*/true);
  Trajectory t = run_rollout(prompt(), policy, *sandbox_, {});
  ASSERT_TRUE(t.token_log.has_value());
  std::size_t policy_tokens = 0;
  for (const TokenEntry& e : *t.token_log) {
    const Message& m = t.messages[static_cast<std::size_t>(e.message_index)];
    EXPECT_EQ(e.loss_mask, m.origin == Origin::kPolicy ? 1 : 0);
    policy_tokens += e.loss_mask;
  }
  std::size_t expected = 0;
  for (const Message& m : t.messages) {
    if (m.origin == Origin::kPolicy) expected += whitespace_tokenize(m.text).size();
  }
  EXPECT_EQ(policy_tokens, expected);
}

TEST_F(RolloutTest, NoTokenDataWithoutLogprobs) {
  ScriptedPolicy policy({answer_turn("ok", "SELECT 1")});
  Trajectory t = run_rollout(prompt(), policy, *sandbox_, {});
  EXPECT_FALSE(t.token_log.has_value());
  EXPECT_THROW(mask_tokens(t), MissingTokenData);
}

TEST_F(RolloutTest, GroupIsDeterministicAndOrdered) {
  StochasticScriptedPolicy policy(
      {{answer_turn("a", "SELECT 1")}, {"void", answer_turn("b", "SELECT 2")}});
  RolloutConfig cfg;
  cfg.group_size = 5;
  cfg.parallelism = 3;
  RolloutGroup g1 = run_group(prompt(), policy, *sandbox_, cfg);
  RolloutGroup g2 = run_group(prompt(), policy, *sandbox_, cfg);
  ASSERT_EQ(g1.trajectories.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(g1.trajectories[i].messages, g2.trajectories[i].messages);
    EXPECT_EQ(g1.trajectories[i].rethink_count, static_cast<int>(i % 2));
  }
}

TEST(ContextTest, EstimatesAndFlagsBudget) {
  Context c = build_context("s", "u", {Message::assistant(std::string(400, 'x'))},
                            50);
  EXPECT_EQ(c.messages.size(), 3u);
  EXPECT_EQ(c.estimated_tokens, 5u + 5u + 104u);
  EXPECT_TRUE(c.over_budget);
}

TEST(RolloutConfigTest, Validation) {
  RolloutConfig cfg;
  cfg.max_turns = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.temperature = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace tirsql
