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

#ifndef TIRSQL_TRAJECTORY_H_
#define TIRSQL_TRAJECTORY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tirsql/message.h"
#include "tirsql/protocol.h"
#include "tirsql/sandbox.h"

namespace tirsql {

enum class Termination { kAnswered, kBudgetExhausted, kPolicyError };

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);

struct ToolRecord {
  ToolInvocation call;
  ExecOutcome outcome;
  // 1-based assistant turn that issued the call.
  int turn_index = 0;
};

struct TokenEntry {
  std::int64_t token_id = -1;
  double logprob = 0.0;
  int loss_mask = 0;
  // Index into Trajectory::messages of the message this token belongs to.
  int message_index = 0;

  bool operator==(const TokenEntry&) const = default;
};

struct RewardBreakdown {
  double r_format = 0.0;
  double r_exec = 0.0;
  double r_result = 0.0;
  double total = 0.0;
  // The final answer SQL ran without error.
  bool answer_executes = false;
  std::vector<std::string> details;
};

struct Trajectory {
  std::string prompt_id;
  std::string db_name;
  std::vector<Message> messages;
  std::vector<ToolRecord> tool_records;
  Termination termination = Termination::kBudgetExhausted;
  std::string termination_detail;
  int turns_used = 0;
  int rethink_count = 0;
  std::optional<std::vector<TokenEntry>> token_log;
  std::optional<RewardBreakdown> reward;

  const Message* last_assistant() const;
};

// G trajectories sampled for one prompt, with filter verdicts and the
// advantages that feed the surrogate loss.
struct RolloutGroup {
  std::string prompt_id;
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
  std::vector<double> quality;
  std::vector<double> advantages;
  std::vector<bool> kept;
};

}  // namespace tirsql

#endif  // TIRSQL_TRAJECTORY_H_
