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

#include "tirsql/protocol.h"

#include <algorithm>
#include <array>
#include <cctype>

#include <nlohmann/json.hpp>

#include "tirsql/message.h"

namespace tirsql {
namespace {

constexpr std::array<SegmentKind, 4> kTaggedKinds = {
    SegmentKind::kThink, SegmentKind::kToolCall, SegmentKind::kToolResponse,
    SegmentKind::kAnswer};

bool starts_with_at(std::string_view text, std::size_t pos,
                    std::string_view prefix) {
  return text.size() - pos >= prefix.size() &&
         text.compare(pos, prefix.size(), prefix) == 0;
}

// Earliest position >= from at which any recognized open tag starts.
std::size_t find_any_open_tag(std::string_view text, std::size_t from,
                              std::size_t limit) {
  std::size_t best = std::string_view::npos;
  for (SegmentKind kind : kTaggedKinds) {
    std::size_t p = text.find(open_tag(kind), from);
    if (p != std::string_view::npos && p < limit && p < best) best = p;
  }
  return best;
}

void add_violation(std::vector<std::string>& out, std::string_view code) {
  if (std::find(out.begin(), out.end(), code) == out.end()) {
    out.emplace_back(code);
  }
}

void flush_plain(std::string_view text, std::size_t from, std::size_t to,
                 std::vector<Segment>& segments) {
  if (from >= to) return;
  std::string_view piece = text.substr(from, to - from);
  if (!segments.empty() && segments.back().kind == SegmentKind::kPlain &&
      segments.back().end == from) {
    segments.back().text.append(piece);
    segments.back().end = to;
    return;
  }
  if (is_blank(piece)) return;
  segments.push_back({SegmentKind::kPlain, std::string(piece), from, to});
}

}  // namespace

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kThink:
      return "Think";
    case SegmentKind::kToolCall:
      return "ToolCall";
    case SegmentKind::kToolResponse:
      return "ToolResponse";
    case SegmentKind::kAnswer:
      return "Answer";
    case SegmentKind::kPlain:
      return "Plain";
  }
  return "Plain";
}

std::string_view open_tag(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kThink:
      return "<think>";
    case SegmentKind::kToolCall:
      return "<tool_call>";
    case SegmentKind::kToolResponse:
      return "<tool_response>";
    case SegmentKind::kAnswer:
      return "<answer>";
    case SegmentKind::kPlain:
      return "";
  }
  return "";
}

std::string_view close_tag(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kThink:
      return "</think>";
    case SegmentKind::kToolCall:
      return "</tool_call>";
    case SegmentKind::kToolResponse:
      return "</tool_response>";
    case SegmentKind::kAnswer:
      return "</answer>";
    case SegmentKind::kPlain:
      return "";
  }
  return "";
}

std::string trim(std::string_view s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto first = std::find_if(s.begin(), s.end(), not_space);
  auto last = std::find_if(s.rbegin(), s.rend(), not_space).base();
  if (first >= last) return {};
  return std::string(first, last);
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

bool TurnParse::has(SegmentKind kind) const { return first(kind) != nullptr; }

const Segment* TurnParse::first(SegmentKind kind) const {
  for (const Segment& s : segments) {
    if (s.kind == kind) return &s;
  }
  return nullptr;
}

std::size_t TurnParse::count(SegmentKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(segments.begin(), segments.end(),
                    [kind](const Segment& s) { return s.kind == kind; }));
}

TurnParse parse_assistant_turn(std::string_view text) {
  TurnParse out;
  const std::size_t n = text.size();
  std::size_t pos = 0;
  std::size_t plain_start = 0;

  while (pos < n) {
    std::size_t lt = text.find('<', pos);
    if (lt == std::string_view::npos) break;

    SegmentKind kind = SegmentKind::kPlain;
    for (SegmentKind k : kTaggedKinds) {
      if (starts_with_at(text, lt, open_tag(k))) {
        kind = k;
        break;
      }
    }
    if (kind == SegmentKind::kPlain) {
      pos = lt + 1;
      continue;
    }

    flush_plain(text, plain_start, lt, out.segments);
    const std::size_t body = lt + open_tag(kind).size();
    const std::size_t close = text.find(close_tag(kind), body);
    const std::size_t nested = find_any_open_tag(text, body, close);
    if (close == std::string_view::npos || nested != std::string_view::npos) {
      // The open tag has no matching close before the next open tag; it is
      // kept as untagged text and scanning resumes right after it.
      add_violation(out.violations, violation::kUnclosedTag);
      plain_start = lt;
      pos = body;
      continue;
    }
    const std::size_t end = close + close_tag(kind).size();
    out.segments.push_back(
        {kind, std::string(text.substr(body, close - body)), lt, end});
    pos = plain_start = end;
  }
  flush_plain(text, plain_start, n, out.segments);

  if (out.count(SegmentKind::kPlain) > 0) {
    add_violation(out.violations, violation::kStrayText);
  }
  const std::size_t thinks = out.count(SegmentKind::kThink);
  if (thinks == 0) {
    add_violation(out.violations, violation::kMissingThink);
  } else {
    if (out.segments.front().kind != SegmentKind::kThink) {
      add_violation(out.violations, violation::kThinkNotFirst);
    }
    if (thinks > 1) add_violation(out.violations, violation::kMultipleThink);
  }
  if (out.has(SegmentKind::kToolResponse)) {
    add_violation(out.violations, violation::kModelToolResponse);
  }
  const std::size_t calls = out.count(SegmentKind::kToolCall);
  const std::size_t answers = out.count(SegmentKind::kAnswer);
  if (calls > 0 && answers > 0) {
    add_violation(out.violations, violation::kBothCallAndAnswer);
  }
  if (calls > 1) add_violation(out.violations, violation::kMultipleToolCalls);
  if (answers > 1) add_violation(out.violations, violation::kMultipleAnswers);
  if (calls == 0 && answers == 0) {
    add_violation(out.violations, violation::kMissingAction);
  }

  out.format_ok = out.violations.empty();
  return out;
}

std::string reserialize(const TurnParse& parse, std::string_view source) {
  std::string out;
  out.reserve(source.size());
  std::size_t cursor = 0;
  for (const Segment& s : parse.segments) {
    if (s.begin > cursor) out.append(source.substr(cursor, s.begin - cursor));
    out.append(open_tag(s.kind));
    out.append(s.text);
    out.append(close_tag(s.kind));
    cursor = s.end;
  }
  if (cursor < source.size()) out.append(source.substr(cursor));
  return out;
}

std::string_view to_string(ProtocolError::Code code) {
  switch (code) {
    case ProtocolError::Code::kMalformedJson:
      return "MalformedJson";
    case ProtocolError::Code::kMissingArgument:
      return "MissingArgument";
    case ProtocolError::Code::kUnknownTool:
      return "UnknownTool";
    case ProtocolError::Code::kEmptyAnswer:
      return "EmptyAnswer";
  }
  return "MalformedJson";
}

ToolInvocation extract_tool_call(const Segment& segment,
                                 std::string_view expected_tool) {
  using Code = ProtocolError::Code;
  using nlohmann::json;

  json body = json::parse(segment.text, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded() || !body.is_object()) {
    throw ProtocolError(Code::kMalformedJson,
                        "tool call body is not a JSON object");
  }
  auto name = body.find("name");
  if (name == body.end() || !name->is_string()) {
    throw ProtocolError(Code::kMissingArgument, "missing argument: name");
  }
  ToolInvocation call;
  call.name = name->get<std::string>();
  if (call.name != expected_tool) {
    throw ProtocolError(Code::kUnknownTool, "unknown tool: " + call.name);
  }

  auto args_it = body.find("arguments");
  if (args_it == body.end()) {
    throw ProtocolError(Code::kMissingArgument, "missing argument: arguments");
  }
  json args = *args_it;
  // Some chat templates emit the arguments as a JSON-encoded string.
  if (args.is_string()) {
    args = json::parse(args.get<std::string>(), nullptr, false);
  }
  if (args.is_discarded() || !args.is_object()) {
    throw ProtocolError(Code::kMalformedJson, "arguments is not a JSON object");
  }
  for (const char* key : {"db_name", "sql"}) {
    auto it = args.find(key);
    if (it == args.end() || !it->is_string() ||
        is_blank(it->get_ref<const std::string&>())) {
      throw ProtocolError(Code::kMissingArgument,
                          std::string("missing argument: ") + key);
    }
  }
  call.db_name = args["db_name"].get<std::string>();
  call.sql = args["sql"].get<std::string>();
  return call;
}

std::string extract_answer_sql(const Segment& segment) {
  constexpr std::string_view kFence = "```";
  constexpr std::string_view kSqlFence = "```sql";
  std::string_view body = segment.text;
  std::string sql;
  std::size_t open = body.find(kSqlFence);
  if (open == std::string_view::npos) {
    sql = trim(body);
  } else {
    std::size_t start = open + kSqlFence.size();
    std::size_t close = body.find(kFence, start);
    sql = trim(body.substr(start, close == std::string_view::npos
                                      ? std::string_view::npos
                                      : close - start));
  }
  if (sql.empty()) {
    throw ProtocolError(ProtocolError::Code::kEmptyAnswer, "answer is empty");
  }
  return sql;
}

namespace {

bool is_tool_response_message(const Message& m) {
  return m.origin == Origin::kEnvironment &&
         trim(m.text).starts_with(open_tag(SegmentKind::kToolResponse));
}

}  // namespace

FormatVerdict validate_trajectory_format(const std::vector<Message>& messages) {
  FormatVerdict verdict;
  int turn = 0;
  const TurnParse* last_parse = nullptr;
  TurnParse parse;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const Message& m = messages[i];
    if (m.role != Role::kAssistant) continue;
    ++turn;
    parse = parse_assistant_turn(m.text);
    last_parse = &parse;
    const std::string prefix = "turn" + std::to_string(turn) + ":";
    for (const std::string& v : parse.violations) {
      verdict.violations.push_back(prefix + v);
    }
    if (parse.has(SegmentKind::kToolCall) && i + 1 < messages.size() &&
        !is_tool_response_message(messages[i + 1])) {
      verdict.violations.push_back(
          prefix + std::string(violation::kToolCallWithoutResponse));
    }
  }
  if (turn == 0) {
    verdict.violations.emplace_back(violation::kNoAssistantTurn);
  }
  if (last_parse == nullptr || !last_parse->has(SegmentKind::kAnswer)) {
    verdict.violations.emplace_back(violation::kNoFinalAnswer);
  }
  verdict.ok = verdict.violations.empty();
  return verdict;
}

bool all_turns_well_formed(const std::vector<Message>& messages) {
  bool any = false;
  for (const Message& m : messages) {
    if (m.role != Role::kAssistant) continue;
    any = true;
    if (!parse_assistant_turn(m.text).format_ok) return false;
  }
  return any;
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::kPrompt:
      return "prompt";
    case Origin::kPolicy:
      return "policy";
    case Origin::kEnvironment:
      return "environment";
  }
  return "prompt";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::kSystem;
  if (s == "assistant") return Role::kAssistant;
  if (s == "user") return Role::kUser;
  throw std::invalid_argument("unknown role: " + std::string(s));
}

Origin origin_from_string(std::string_view s) {
  if (s == "prompt") return Origin::kPrompt;
  if (s == "policy") return Origin::kPolicy;
  if (s == "environment") return Origin::kEnvironment;
  throw std::invalid_argument("unknown origin: " + std::string(s));
}

}  // namespace tirsql
