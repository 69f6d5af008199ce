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

#ifndef TIRSQL_ROLLOUT_H_
#define TIRSQL_ROLLOUT_H_

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tirsql/policy.h"
#include "tirsql/sandbox.h"
#include "tirsql/trajectory.h"

namespace tirsql {

inline constexpr const char* kRethinkText =
    "My action is not correct. Let me rethink.";

struct RolloutConfig {
  int max_turns = 6;
  int group_size = 5;
  double temperature = 0.6;
  int max_sequence_tokens = 8192;
  std::string rethink_text = kRethinkText;
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff{200};
  std::size_t parallelism = 8;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument.
  void validate() const;
};

struct Prompt {
  std::string id;
  std::string db_name;
  std::string system;
  std::string user;
};

struct Context {
  std::vector<Message> messages;
  std::size_t estimated_tokens = 0;
  bool over_budget = false;
};

// Rough token count (about four bytes per token plus per-message framing).
std::size_t estimate_tokens(const std::vector<Message>& messages);

// [system, user, history...] with no summarization; over_budget is set when
// the estimate exceeds max_sequence_tokens.
Context build_context(const std::string& system, const std::string& user,
                      const std::vector<Message>& history,
                      int max_sequence_tokens = 8192);

// Environment message carrying a tool result back to the policy.
std::string wrap_tool_response(const ExecOutcome& outcome);

// One multi-turn rollout: generate, parse, execute tool calls, inject the
// rethink prompt after unusable turns, stop on an answer or the turn budget.
Trajectory run_rollout(const Prompt& prompt, PolicyEndpoint& policy,
                       const SandboxClient& sandbox, const RolloutConfig& cfg,
                       std::uint64_t sample_seed = 0);

// cfg.group_size independent rollouts for one prompt, in member order.
RolloutGroup run_group(const Prompt& prompt, PolicyEndpoint& policy,
                       const SandboxClient& sandbox, const RolloutConfig& cfg);

class MissingTokenData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sets loss_mask to 1 on tokens of policy-generated messages and 0 on prompt,
// tool-response and rethink tokens. Throws MissingTokenData.
Trajectory mask_tokens(Trajectory traj);

}  // namespace tirsql

#endif  // TIRSQL_ROLLOUT_H_
