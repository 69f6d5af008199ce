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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "tirsql/protocol.h"

namespace tirsql {

void RewardConfig::validate() const {
  if (format_magnitude < 0 || exec_magnitude < 0 || result_magnitude < 0) {
    throw std::invalid_argument("reward magnitudes must be >= 0");
  }
}

std::optional<std::string> final_answer_sql(const Trajectory& traj) {
  const Message* last = traj.last_assistant();
  if (last == nullptr) return std::nullopt;
  TurnParse parse = parse_assistant_turn(last->text);
  const Segment* answer = parse.first(SegmentKind::kAnswer);
  if (answer == nullptr) return std::nullopt;
  try {
    return extract_answer_sql(*answer);
  } catch (const ProtocolError&) {
    return std::nullopt;
  }
}

double format_reward(const Trajectory& traj, const RewardConfig& cfg) {
  return validate_trajectory_format(traj.messages).ok ? cfg.format_magnitude
                                                      : -cfg.format_magnitude;
}

namespace {

struct Graded {
  bool format_ok = false;
  std::optional<std::string> sql;
  std::optional<ExecOutcome> pred;
};

Graded grade_answer(const Trajectory& traj, const Sandbox& sandbox) {
  Graded g;
  g.format_ok = validate_trajectory_format(traj.messages).ok;
  if (!g.format_ok) return g;
  g.sql = final_answer_sql(traj);
  if (g.sql) {
    g.pred = sandbox.execute_all(traj.db_name, *g.sql);
  }
  return g;
}

double exec_component(const Graded& g, const RewardConfig& cfg) {
  if (!g.format_ok) return 0.0;
  return g.pred && succeeded(*g.pred) ? cfg.exec_magnitude
                                      : -cfg.exec_magnitude;
}

double result_component(const Graded& g, const std::string& db_name,
                        const std::string& gold_sql, const Sandbox& sandbox,
                        const RewardConfig& cfg) {
  if (!g.format_ok || !g.pred || !succeeded(*g.pred)) return 0.0;
  ExecOutcome gold = sandbox.execute_all(db_name, gold_sql);
  if (const auto* err = std::get_if<ExecError>(&gold)) {
    throw GoldExecutionFailed("gold SQL failed on " + db_name + ": " +
                              std::string(to_string(err->kind)) + ": " +
                              err->message);
  }
  const bool equal =
      results_equal(std::get<QueryResult>(*g.pred),
                    std::get<QueryResult>(gold), order_sensitive(gold_sql));
  return equal ? cfg.result_magnitude : -cfg.result_magnitude;
}

// Integer-valued reals compare equal to integers.
Cell normalize(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) {
    if (std::isfinite(*d) && std::floor(*d) == *d &&
        std::fabs(*d) < 9.0e15) {
      return static_cast<std::int64_t>(*d);
    }
  }
  return c;
}

std::vector<Row> normalized_rows(const QueryResult& r) {
  std::vector<Row> rows;
  rows.reserve(r.rows.size());
  for (const Row& row : r.rows) {
    Row out;
    out.reserve(row.size());
    for (const Cell& c : row) out.push_back(normalize(c));
    rows.push_back(std::move(out));
  }
  return rows;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

double execution_reward(const Trajectory& traj, const Sandbox& sandbox,
                        const RewardConfig& cfg) {
  return exec_component(grade_answer(traj, sandbox), cfg);
}

double result_reward(const Trajectory& traj, const std::string& gold_sql,
                     const Sandbox& sandbox, const RewardConfig& cfg) {
  return result_component(grade_answer(traj, sandbox), traj.db_name, gold_sql,
                          sandbox, cfg);
}

bool order_sensitive(std::string_view sql) {
  // Blank out literals, quoted identifiers, comments and anything nested in
  // parentheses, then look for ORDER BY as whole words.
  std::string top;
  top.reserve(sql.size());
  int depth = 0;
  for (std::size_t i = 0; i < sql.size(); ++i) {
    const char c = sql[i];
    if (c == '\'' || c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      std::size_t j = i + 1;
      while (j < sql.size()) {
        if (sql[j] == close) {
          if (close != ']' && j + 1 < sql.size() && sql[j + 1] == close) {
            j += 2;
            continue;
          }
          break;
        }
        ++j;
      }
      i = j;
      top.push_back(' ');
      continue;
    }
    if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
      while (i < sql.size() && sql[i] != '\n') ++i;
      top.push_back(' ');
      continue;
    }
    if (c == '/' && i + 1 < sql.size() && sql[i + 1] == '*') {
      auto end = sql.find("*/", i + 2);
      i = end == std::string_view::npos ? sql.size() : end + 1;
      top.push_back(' ');
      continue;
    }
    if (c == '(') {
      ++depth;
      top.push_back(' ');
      continue;
    }
    if (c == ')') {
      depth = std::max(0, depth - 1);
      top.push_back(' ');
      continue;
    }
    top.push_back(depth == 0 ? static_cast<char>(std::toupper(
                                   static_cast<unsigned char>(c)))
                             : ' ');
  }
  std::size_t pos = 0;
  while ((pos = top.find("ORDER", pos)) != std::string::npos) {
    const bool starts = pos == 0 || !is_word_char(top[pos - 1]);
    std::size_t k = pos + 5;
    const bool ends = k < top.size() && !is_word_char(top[k]);
    if (starts && ends) {
      while (k < top.size() &&
             std::isspace(static_cast<unsigned char>(top[k]))) {
        ++k;
      }
      if (top.compare(k, 2, "BY") == 0 &&
          (k + 2 == top.size() || !is_word_char(top[k + 2]))) {
        return true;
      }
    }
    pos += 5;
  }
  return false;
}

bool results_equal(const QueryResult& pred, const QueryResult& gold,
                   bool order_sensitive) {
  if (pred.columns.size() != gold.columns.size()) return false;
  if (pred.rows.size() != gold.rows.size()) return false;
  std::vector<Row> a = normalized_rows(pred);
  std::vector<Row> b = normalized_rows(gold);
  if (!order_sensitive) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
  }
  return a == b;
}

RewardBreakdown compose_reward(bool format_ok, bool executes, bool matches,
                               const RewardConfig& cfg) {
  RewardBreakdown out;
  out.r_format = format_ok ? cfg.format_magnitude : -cfg.format_magnitude;
  if (format_ok) {
    out.answer_executes = executes;
    out.r_exec = executes ? cfg.exec_magnitude : -cfg.exec_magnitude;
    if (executes) {
      out.r_result = matches ? cfg.result_magnitude : -cfg.result_magnitude;
    }
  }
  out.total = out.r_format + out.r_exec + out.r_result;
  return out;
}

RewardBreakdown total_reward(const Trajectory& traj,
                             const std::string& gold_sql,
                             const Sandbox& sandbox, const RewardConfig& cfg) {
  cfg.validate();
  RewardBreakdown out;
  FormatVerdict verdict = validate_trajectory_format(traj.messages);
  out.r_format = verdict.ok ? cfg.format_magnitude : -cfg.format_magnitude;
  for (const std::string& v : verdict.violations) {
    out.details.push_back("format:" + v);
  }
  Graded g = grade_answer(traj, sandbox);
  out.r_exec = exec_component(g, cfg);
  if (g.format_ok && !g.sql) out.details.push_back("exec:no_answer_sql");
  if (g.pred) {
    if (const auto* err = std::get_if<ExecError>(&*g.pred)) {
      out.details.push_back("exec:" + std::string(to_string(err->kind)) +
                            ": " + err->message);
    }
  }
  out.r_result = result_component(g, traj.db_name, gold_sql, sandbox, cfg);
  out.answer_executes = g.pred && succeeded(*g.pred);
  if (g.format_ok && out.answer_executes) {
    out.details.push_back(out.r_result > 0 ? "result:match" : "result:mismatch");
  }
  out.total = out.r_format + out.r_exec + out.r_result;
  return out;
}

}  // namespace tirsql
