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

#ifndef TIRSQL_MOCK_POLICY_H_
#define TIRSQL_MOCK_POLICY_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tirsql/policy.h"

namespace tirsql {

// Whitespace tokenizer with hashed ids. Stands in for a real tokenizer when
// a mock endpoint is asked for token data.
std::vector<std::int64_t> whitespace_tokenize(const std::string& text);

// Base for deterministic in-process endpoints. Optionally attaches token
// data (whitespace tokens, fixed pseudo-logprobs) to each reply.
class MockPolicy : public PolicyEndpoint {
 public:
  explicit MockPolicy(bool report_tokens = false)
      : report_tokens_(report_tokens) {}

  PolicyReply generate(const PolicyRequest& request) final;
  std::optional<std::vector<std::int64_t>> tokenize(
      const std::string& text) override;

 protected:
  virtual std::string next_turn(const PolicyRequest& request) = 0;

 private:
  bool report_tokens_;
};

// Replays a fixed list of assistant turns; the k-th assistant turn of a
// rollout gets script[k] (the last entry repeats past the end).
class ScriptedPolicy : public MockPolicy {
 public:
  explicit ScriptedPolicy(std::vector<std::string> script,
                          bool report_tokens = false);

 protected:
  std::string next_turn(const PolicyRequest& request) override;

 private:
  std::vector<std::string> script_;
};

// Chooses one of several scripts from the sampling seed. At temperature 0 it
// always replays the first script.
class StochasticScriptedPolicy : public MockPolicy {
 public:
  explicit StochasticScriptedPolicy(std::vector<std::vector<std::string>> scripts,
                                    bool report_tokens = false);

 protected:
  std::string next_turn(const PolicyRequest& request) override;

 private:
  std::vector<std::vector<std::string>> scripts_;
};

// Knows the gold query for each prompt (keyed by the user message text):
// validates it with one tool call, then answers with it.
class OraclePolicy : public MockPolicy {
 public:
  struct Target {
    std::string db_name;
    std::string sql;
  };
  explicit OraclePolicy(std::map<std::string, Target> by_user_text,
                        bool report_tokens = false);

 protected:
  std::string next_turn(const PolicyRequest& request) override;

 private:
  std::map<std::string, Target> targets_;
};

// Answers every prompt with the same SQL in a single turn.
class ConstantAnswerPolicy : public MockPolicy {
 public:
  explicit ConstantAnswerPolicy(std::string sql, bool report_tokens = false);

 protected:
  std::string next_turn(const PolicyRequest& request) override;

 private:
  std::string sql_;
};

// Well-formed assistant turns.
std::string tool_call_turn(const std::string& thought, const std::string& db_name,
                           const std::string& sql);
std::string answer_turn(const std::string& thought, const std::string& sql);

std::size_t assistant_turns(const std::vector<Message>& messages);

}  // namespace tirsql

#endif  // TIRSQL_MOCK_POLICY_H_
