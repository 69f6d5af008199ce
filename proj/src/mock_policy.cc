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

#include "tirsql/mock_policy.h"

#include <algorithm>
#include <sstream>

namespace tirsql {
namespace {

std::int64_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return static_cast<std::int64_t>(h % 32000u);
}

}  // namespace

std::vector<std::int64_t> whitespace_tokenize(const std::string& text) {
  std::vector<std::int64_t> ids;
  std::istringstream in(text);
  std::string word;
  while (in >> word) ids.push_back(fnv1a(word));
  return ids;
}

std::size_t assistant_turns(const std::vector<Message>& messages) {
  return static_cast<std::size_t>(
      std::count_if(messages.begin(), messages.end(), [](const Message& m) {
        return m.role == Role::kAssistant;
      }));
}

PolicyReply MockPolicy::generate(const PolicyRequest& request) {
  PolicyReply reply;
  reply.text = next_turn(request);
  reply.finish_reason = "stop";
  if (report_tokens_) {
    std::vector<TokenLogprob> tokens;
    for (std::int64_t id : whitespace_tokenize(reply.text)) {
      tokens.push_back({id, -0.05 * static_cast<double>(1 + id % 7)});
    }
    reply.tokens = std::move(tokens);
  }
  return reply;
}

std::optional<std::vector<std::int64_t>> MockPolicy::tokenize(
    const std::string& text) {
  if (!report_tokens_) return std::nullopt;
  return whitespace_tokenize(text);
}

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> script,
                               bool report_tokens)
    : MockPolicy(report_tokens), script_(std::move(script)) {
  if (script_.empty()) throw std::invalid_argument("empty policy script");
}

std::string ScriptedPolicy::next_turn(const PolicyRequest& request) {
  std::size_t k = assistant_turns(request.messages);
  return script_[std::min(k, script_.size() - 1)];
}

StochasticScriptedPolicy::StochasticScriptedPolicy(
    std::vector<std::vector<std::string>> scripts, bool report_tokens)
    : MockPolicy(report_tokens), scripts_(std::move(scripts)) {
  if (scripts_.empty() ||
      std::any_of(scripts_.begin(), scripts_.end(),
                  [](const auto& s) { return s.empty(); })) {
    throw std::invalid_argument("empty policy script");
  }
}

std::string StochasticScriptedPolicy::next_turn(const PolicyRequest& request) {
  std::size_t pick = 0;
  if (request.sampling.temperature > 0.0 && request.sampling.seed) {
    pick = static_cast<std::size_t>(*request.sampling.seed % scripts_.size());
  }
  const auto& script = scripts_[pick];
  std::size_t k = assistant_turns(request.messages);
  return script[std::min(k, script.size() - 1)];
}

OraclePolicy::OraclePolicy(std::map<std::string, Target> by_user_text,
                           bool report_tokens)
    : MockPolicy(report_tokens), targets_(std::move(by_user_text)) {}

std::string OraclePolicy::next_turn(const PolicyRequest& request) {
  const Message* user = nullptr;
  for (const Message& m : request.messages) {
    if (m.role == Role::kUser && m.origin == Origin::kPrompt) {
      user = &m;
      break;
    }
  }
  auto it = user ? targets_.find(user->text) : targets_.end();
  if (it == targets_.end()) {
    return answer_turn("I do not recognize this question.", "SELECT NULL");
  }
  if (assistant_turns(request.messages) == 0) {
    return tool_call_turn("Let me validate the query first.",
                          it->second.db_name, it->second.sql);
  }
  return answer_turn("The query returned the expected result.", it->second.sql);
}

ConstantAnswerPolicy::ConstantAnswerPolicy(std::string sql, bool report_tokens)
    : MockPolicy(report_tokens), sql_(std::move(sql)) {}

std::string ConstantAnswerPolicy::next_turn(const PolicyRequest&) {
  return answer_turn("Answering directly.", sql_);
}

std::string tool_call_turn(const std::string& thought,
                           const std::string& db_name, const std::string& sql) {
  nlohmann::ordered_json call = {
      {"name", "sql-execute_sql_query"},
      {"arguments", {{"db_name", db_name}, {"sql", sql}}}};
  return "<think>\n" + thought + "\n</think>\n<tool_call>\n" + call.dump(2) +
         "\n</tool_call>";
}

std::string answer_turn(const std::string& thought, const std::string& sql) {
  return "<think>\n" + thought + "\n</think>\n<answer>\n```sql\n" + sql +
         "\n```\n</answer>";
}

}  // namespace tirsql
