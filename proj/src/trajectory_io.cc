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

#include "tirsql/trajectory_io.h"

#include <istream>
#include <ostream>
#include <string>

namespace tirsql {
namespace {

using ojson = nlohmann::ordered_json;

ojson cell_json(const Cell& cell) {
  if (const auto* blob = std::get_if<BlobHex>(&cell)) {
    return ojson{{"blob", blob->hex}};
  }
  return cell_to_json(cell);
}

Cell cell_from(const nlohmann::json& v) {
  if (v.is_null()) return std::monostate{};
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object() && v.contains("blob") && v["blob"].is_string()) {
    return BlobHex{v["blob"].get<std::string>()};
  }
  throw TrajectoryFormatError("unsupported cell value: " + v.dump());
}

template <typename T>
T field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw TrajectoryFormatError(std::string("missing field: ") + key);
  }
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw TrajectoryFormatError(std::string("bad type for field: ") + key);
  }
}

}  // namespace

ojson outcome_to_json(const ExecOutcome& outcome) {
  if (const auto* err = std::get_if<ExecError>(&outcome)) {
    return ojson{{"ok", false},
                 {"kind", std::string(to_string(err->kind))},
                 {"message", err->message}};
  }
  const auto& r = std::get<QueryResult>(outcome);
  ojson rows = ojson::array();
  for (const Row& row : r.rows) {
    ojson cells = ojson::array();
    for (const Cell& c : row) cells.push_back(cell_json(c));
    rows.push_back(std::move(cells));
  }
  return ojson{{"ok", true},
               {"columns", r.columns},
               {"rows", std::move(rows)},
               {"truncated", r.truncated},
               {"row_limit", r.row_limit},
               {"elapsed_ms", r.elapsed_ms}};
}

ExecOutcome outcome_from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw TrajectoryFormatError("outcome is not an object");
  if (!field<bool>(value, "ok")) {
    auto kind = exec_error_kind_from_string(field<std::string>(value, "kind"));
    if (!kind) throw TrajectoryFormatError("unknown error kind");
    return ExecError{*kind, field<std::string>(value, "message")};
  }
  QueryResult r;
  r.columns = field<std::vector<std::string>>(value, "columns");
  for (const auto& row : field<nlohmann::json>(value, "rows")) {
    Row out;
    for (const auto& c : row) out.push_back(cell_from(c));
    r.rows.push_back(std::move(out));
  }
  r.truncated = field<bool>(value, "truncated");
  r.row_limit = field<std::size_t>(value, "row_limit");
  r.elapsed_ms = field<double>(value, "elapsed_ms");
  return r;
}

ojson trajectory_to_json(const Trajectory& traj) {
  ojson messages = ojson::array();
  for (const Message& m : traj.messages) {
    messages.push_back({{"role", std::string(to_string(m.role))},
                        {"origin", std::string(to_string(m.origin))},
                        {"text", m.text}});
  }
  ojson tools = ojson::array();
  for (const ToolRecord& t : traj.tool_records) {
    tools.push_back({{"turn_index", t.turn_index},
                     {"name", t.call.name},
                     {"db_name", t.call.db_name},
                     {"sql", t.call.sql},
                     {"outcome", outcome_to_json(t.outcome)}});
  }
  ojson tokens = nullptr;
  if (traj.token_log) {
    tokens = ojson::array();
    for (const TokenEntry& e : *traj.token_log) {
      tokens.push_back({{"token_id", e.token_id},
                        {"logprob", e.logprob},
                        {"loss_mask", e.loss_mask},
                        {"message_index", e.message_index}});
    }
  }
  ojson reward = nullptr;
  if (traj.reward) {
    const RewardBreakdown& r = *traj.reward;
    reward = {{"r_format", r.r_format},
              {"r_exec", r.r_exec},
              {"r_result", r.r_result},
              {"total", r.total},
              {"answer_executes", r.answer_executes},
              {"details", r.details}};
  }
  return ojson{{"prompt_id", traj.prompt_id},
               {"db_name", traj.db_name},
               {"termination", std::string(to_string(traj.termination))},
               {"termination_detail", traj.termination_detail},
               {"turns_used", traj.turns_used},
               {"rethink_count", traj.rethink_count},
               {"messages", std::move(messages)},
               {"tool_records", std::move(tools)},
               {"token_log", std::move(tokens)},
               {"reward", std::move(reward)}};
}

Trajectory trajectory_from_json(const nlohmann::json& record) {
  if (!record.is_object()) throw TrajectoryFormatError("record is not an object");
  Trajectory t;
  try {
    t.prompt_id = field<std::string>(record, "prompt_id");
    t.db_name = field<std::string>(record, "db_name");
    t.termination =
        termination_from_string(field<std::string>(record, "termination"));
    t.termination_detail = field<std::string>(record, "termination_detail");
    t.turns_used = field<int>(record, "turns_used");
    t.rethink_count = field<int>(record, "rethink_count");
    for (const auto& m : field<nlohmann::json>(record, "messages")) {
      t.messages.push_back({role_from_string(field<std::string>(m, "role")),
                            field<std::string>(m, "text"),
                            origin_from_string(field<std::string>(m, "origin"))});
    }
    for (const auto& r : field<nlohmann::json>(record, "tool_records")) {
      ToolRecord rec{{field<std::string>(r, "name"),
                      field<std::string>(r, "db_name"),
                      field<std::string>(r, "sql")},
                     outcome_from_json(field<nlohmann::json>(r, "outcome")),
                     field<int>(r, "turn_index")};
      t.tool_records.push_back(std::move(rec));
    }
    const auto tokens = field<nlohmann::json>(record, "token_log");
    if (!tokens.is_null()) {
      std::vector<TokenEntry> log;
      for (const auto& e : tokens) {
        log.push_back({field<std::int64_t>(e, "token_id"),
                       field<double>(e, "logprob"), field<int>(e, "loss_mask"),
                       field<int>(e, "message_index")});
      }
      t.token_log = std::move(log);
    }
    const auto reward = field<nlohmann::json>(record, "reward");
    if (!reward.is_null()) {
      RewardBreakdown r;
      r.r_format = field<double>(reward, "r_format");
      r.r_exec = field<double>(reward, "r_exec");
      r.r_result = field<double>(reward, "r_result");
      r.total = field<double>(reward, "total");
      r.answer_executes = field<bool>(reward, "answer_executes");
      r.details = field<std::vector<std::string>>(reward, "details");
      t.reward = std::move(r);
    }
  } catch (const std::invalid_argument& e) {
    throw TrajectoryFormatError(e.what());
  }
  return t;
}

void write_jsonl_line(std::ostream& out, const Trajectory& traj) {
  out << trajectory_to_json(traj).dump() << '\n';
}

void write_jsonl(std::ostream& out, const std::vector<Trajectory>& trajs) {
  for (const Trajectory& t : trajs) write_jsonl_line(out, t);
}

std::vector<Trajectory> read_jsonl(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto parsed = nlohmann::json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      throw TrajectoryFormatError("line " + std::to_string(line_no) +
                                  ": invalid JSON");
    }
    try {
      out.push_back(trajectory_from_json(parsed));
    } catch (const TrajectoryFormatError& e) {
      throw TrajectoryFormatError("line " + std::to_string(line_no) + ": " +
                                  e.what());
    }
  }
  return out;
}

}  // namespace tirsql
