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

#ifndef TIRSQL_PROTOCOL_H_
#define TIRSQL_PROTOCOL_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tirsql {

struct Message;

// Tag vocabulary of an assistant turn.
enum class SegmentKind { kThink, kToolCall, kToolResponse, kAnswer, kPlain };

std::string_view to_string(SegmentKind kind);

// Open/close tag for a tagged kind. Empty for kPlain.
std::string_view open_tag(SegmentKind kind);
std::string_view close_tag(SegmentKind kind);

// A region of an assistant turn. For tagged kinds `text` is the body between
// the tags; `begin`/`end` always cover the whole region including the tags.
struct Segment {
  SegmentKind kind = SegmentKind::kPlain;
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Segment&) const = default;
};

// Violation codes. The full table ships in data/violation_codes.json.
namespace violation {
inline constexpr std::string_view kMissingThink = "MISSING_THINK";
inline constexpr std::string_view kThinkNotFirst = "THINK_NOT_FIRST";
inline constexpr std::string_view kMultipleThink = "MULTIPLE_THINK";
inline constexpr std::string_view kMissingAction = "MISSING_ACTION";
inline constexpr std::string_view kBothCallAndAnswer = "BOTH_CALL_AND_ANSWER";
inline constexpr std::string_view kMultipleToolCalls = "MULTIPLE_TOOL_CALLS";
inline constexpr std::string_view kMultipleAnswers = "MULTIPLE_ANSWERS";
inline constexpr std::string_view kModelToolResponse = "MODEL_TOOL_RESPONSE";
inline constexpr std::string_view kStrayText = "STRAY_TEXT";
inline constexpr std::string_view kUnclosedTag = "UNCLOSED_TAG";
inline constexpr std::string_view kNoFinalAnswer = "NO_FINAL_ANSWER";
inline constexpr std::string_view kNoAssistantTurn = "NO_ASSISTANT_TURN";
inline constexpr std::string_view kToolCallWithoutResponse =
    "TOOL_CALL_WITHOUT_RESPONSE";
}  // namespace violation

// Result of scanning one assistant turn. Whitespace-only gaps between blocks
// are not materialized as segments; any other untagged text is a kPlain
// segment and makes the turn invalid.
struct TurnParse {
  std::vector<Segment> segments;
  bool format_ok = false;
  std::vector<std::string> violations;

  bool has(SegmentKind kind) const;
  const Segment* first(SegmentKind kind) const;
  std::size_t count(SegmentKind kind) const;
};

// Total: never throws on any input.
TurnParse parse_assistant_turn(std::string_view text);

// Rebuilds the source text from a parse: each segment re-wrapped in its tags,
// with the gaps between segments copied from `source`.
std::string reserialize(const TurnParse& parse, std::string_view source);

struct ToolInvocation {
  std::string name;
  std::string db_name;
  std::string sql;

  bool operator==(const ToolInvocation&) const = default;
};

inline constexpr std::string_view kSqlToolName = "sql-execute_sql_query";

class ProtocolError : public std::runtime_error {
 public:
  enum class Code { kMalformedJson, kMissingArgument, kUnknownTool, kEmptyAnswer };

  ProtocolError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

std::string_view to_string(ProtocolError::Code code);

// Parses `{"name": ..., "arguments": {"db_name": ..., "sql": ...}}` from a
// kToolCall segment. Throws ProtocolError.
ToolInvocation extract_tool_call(const Segment& segment,
                                 std::string_view expected_tool = kSqlToolName);

// First ```sql fenced block of a kAnswer segment, or the trimmed body when no
// fence exists. Throws ProtocolError(kEmptyAnswer).
std::string extract_answer_sql(const Segment& segment);

struct FormatVerdict {
  bool ok = false;
  // Per-turn codes are prefixed with the assistant turn index, e.g.
  // "turn1:STRAY_TEXT"; trajectory-level codes are bare.
  std::vector<std::string> violations;
};

// Every assistant turn well-formed, the last one carries an answer, and every
// tool-call turn is followed by an environment tool response.
FormatVerdict validate_trajectory_format(const std::vector<Message>& messages);

// True when every assistant turn parses with format_ok, regardless of whether
// the trajectory ended with an answer.
bool all_turns_well_formed(const std::vector<Message>& messages);

std::string trim(std::string_view s);
bool is_blank(std::string_view s);

}  // namespace tirsql

#endif  // TIRSQL_PROTOCOL_H_
