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

#include <algorithm>
#include <thread>

#include "tirsql/parallel.h"
#include "tirsql/protocol.h"

namespace tirsql {

void RolloutConfig::validate() const {
  if (max_turns < 1) throw std::invalid_argument("max_turns must be >= 1");
  if (group_size < 1) throw std::invalid_argument("group_size must be >= 1");
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (max_sequence_tokens < 1) {
    throw std::invalid_argument("max_sequence_tokens must be >= 1");
  }
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kAnswered:
      return "Answered";
    case Termination::kBudgetExhausted:
      return "BudgetExhausted";
    case Termination::kPolicyError:
      return "PolicyError";
  }
  return "BudgetExhausted";
}

Termination termination_from_string(std::string_view s) {
  if (s == "Answered") return Termination::kAnswered;
  if (s == "BudgetExhausted") return Termination::kBudgetExhausted;
  if (s == "PolicyError") return Termination::kPolicyError;
  throw std::invalid_argument("unknown termination: " + std::string(s));
}

const Message* Trajectory::last_assistant() const {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::kAssistant) return &*it;
  }
  return nullptr;
}

std::size_t estimate_tokens(const std::vector<Message>& messages) {
  std::size_t total = 0;
  for (const Message& m : messages) total += 4 + (m.text.size() + 3) / 4;
  return total;
}

Context build_context(const std::string& system, const std::string& user,
                      const std::vector<Message>& history,
                      int max_sequence_tokens) {
  Context ctx;
  ctx.messages.reserve(history.size() + 2);
  ctx.messages.push_back(Message::system(system));
  ctx.messages.push_back(Message::user(user));
  ctx.messages.insert(ctx.messages.end(), history.begin(), history.end());
  ctx.estimated_tokens = estimate_tokens(ctx.messages);
  ctx.over_budget =
      ctx.estimated_tokens > static_cast<std::size_t>(max_sequence_tokens);
  return ctx;
}

std::string wrap_tool_response(const ExecOutcome& outcome) {
  return std::string(open_tag(SegmentKind::kToolResponse)) + "\n" +
         render_tool_response(outcome) + "\n" +
         std::string(close_tag(SegmentKind::kToolResponse));
}

namespace {

enum class TurnAction { kToolCall, kAnswer, kRethink };

// Decides what the environment does with one generated turn. A turn that
// echoes a <tool_response> block itself is treated as unusable.
TurnAction classify_turn(const TurnParse& parse, ToolInvocation* call) {
  if (parse.has(SegmentKind::kToolResponse)) return TurnAction::kRethink;
  if (const Segment* seg = parse.first(SegmentKind::kToolCall)) {
    try {
      *call = extract_tool_call(*seg);
      return TurnAction::kToolCall;
    } catch (const ProtocolError&) {
      return TurnAction::kRethink;
    }
  }
  if (const Segment* seg = parse.first(SegmentKind::kAnswer)) {
    try {
      extract_answer_sql(*seg);
      return TurnAction::kAnswer;
    } catch (const ProtocolError&) {
      return TurnAction::kRethink;
    }
  }
  return TurnAction::kRethink;
}

void build_token_log(Trajectory& traj,
                     const std::vector<std::optional<std::vector<TokenLogprob>>>&
                         replies,
                     PolicyEndpoint& policy) {
  if (replies.empty() ||
      std::any_of(replies.begin(), replies.end(),
                  [](const auto& r) { return !r.has_value(); })) {
    return;
  }
  std::vector<TokenEntry> log;
  std::size_t reply_index = 0;
  for (std::size_t i = 0; i < traj.messages.size(); ++i) {
    const Message& m = traj.messages[i];
    const int index = static_cast<int>(i);
    if (m.origin == Origin::kPolicy) {
      for (const TokenLogprob& t : *replies[reply_index]) {
        log.push_back({t.token_id, t.logprob, 0, index});
      }
      ++reply_index;
    } else if (auto ids = policy.tokenize(m.text)) {
      for (std::int64_t id : *ids) log.push_back({id, 0.0, 0, index});
    }
  }
  traj.token_log = std::move(log);
}

}  // namespace

Trajectory run_rollout(const Prompt& prompt, PolicyEndpoint& policy,
                       const SandboxClient& sandbox, const RolloutConfig& cfg,
                       std::uint64_t sample_seed) {
  cfg.validate();
  Trajectory traj;
  traj.prompt_id = prompt.id;
  traj.db_name = prompt.db_name;
  traj.termination = Termination::kBudgetExhausted;

  std::vector<Message> history;
  std::vector<std::optional<std::vector<TokenLogprob>>> reply_tokens;
  bool finished = false;

  for (int turn = 1; turn <= cfg.max_turns && !finished; ++turn) {
    Context ctx = build_context(prompt.system, prompt.user, history,
                                cfg.max_sequence_tokens);
    PolicyRequest request;
    request.messages = std::move(ctx.messages);
    request.sampling.temperature = cfg.temperature;
    request.sampling.max_tokens = std::max(
        1, cfg.max_sequence_tokens - static_cast<int>(ctx.estimated_tokens));
    request.sampling.stop = {std::string(close_tag(SegmentKind::kToolCall)),
                             kEosToken};
    request.sampling.seed = sample_seed;

    PolicyReply reply;
    bool generated = false;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      try {
        reply = policy.generate(request);
        generated = true;
        break;
      } catch (const ContextOverflow& e) {
        traj.termination = Termination::kBudgetExhausted;
        traj.termination_detail = std::string("context overflow: ") + e.what();
        finished = true;
        break;
      } catch (const PolicyUnavailable& e) {
        traj.termination_detail = e.what();
        if (attempt < cfg.max_retries) {
          std::this_thread::sleep_for(cfg.retry_backoff * (1 << attempt));
        }
      }
    }
    if (finished) break;
    if (!generated) {
      traj.termination = Termination::kPolicyError;
      finished = true;
      break;
    }

    history.push_back(Message::assistant(reply.text));
    reply_tokens.push_back(std::move(reply.tokens));
    traj.turns_used = turn;

    ToolInvocation call;
    TurnAction action = classify_turn(parse_assistant_turn(reply.text), &call);
    switch (action) {
      case TurnAction::kToolCall: {
        ExecOutcome outcome = sandbox.execute(call.db_name, call.sql);
        history.push_back(Message::environment(wrap_tool_response(outcome)));
        traj.tool_records.push_back({std::move(call), std::move(outcome), turn});
        break;
      }
      case TurnAction::kAnswer:
        traj.termination = Termination::kAnswered;
        traj.termination_detail.clear();
        finished = true;
        break;
      case TurnAction::kRethink:
        if (turn < cfg.max_turns) {
          history.push_back(Message::environment(cfg.rethink_text));
          ++traj.rethink_count;
        }
        break;
    }
  }
  if (!finished && traj.termination_detail.empty()) {
    traj.termination_detail = "turn budget exhausted";
  }

  traj.messages.reserve(history.size() + 2);
  traj.messages.push_back(Message::system(prompt.system));
  traj.messages.push_back(Message::user(prompt.user));
  traj.messages.insert(traj.messages.end(), history.begin(), history.end());

  build_token_log(traj, reply_tokens, policy);
  if (traj.token_log) traj = mask_tokens(std::move(traj));
  return traj;
}

RolloutGroup run_group(const Prompt& prompt, PolicyEndpoint& policy,
                       const SandboxClient& sandbox, const RolloutConfig& cfg) {
  cfg.validate();
  RolloutGroup group;
  group.prompt_id = prompt.id;
  group.trajectories.resize(static_cast<std::size_t>(cfg.group_size));
  parallel_for(group.trajectories.size(), cfg.parallelism, [&](std::size_t i) {
    group.trajectories[i] =
        run_rollout(prompt, policy, sandbox, cfg, cfg.seed + i);
  });
  return group;
}

Trajectory mask_tokens(Trajectory traj) {
  if (!traj.token_log) {
    throw MissingTokenData("trajectory has no token data");
  }
  bool any_policy_token = false;
  for (TokenEntry& t : *traj.token_log) {
    if (t.message_index < 0 ||
        static_cast<std::size_t>(t.message_index) >= traj.messages.size()) {
      throw MissingTokenData("token refers to a message outside the trajectory");
    }
    const bool generated =
        traj.messages[static_cast<std::size_t>(t.message_index)].origin ==
        Origin::kPolicy;
    t.loss_mask = generated ? 1 : 0;
    any_policy_token = any_policy_token || generated;
  }
  if (!any_policy_token) {
    throw MissingTokenData("endpoint supplied no generated-token logprobs");
  }
  return traj;
}

}  // namespace tirsql
