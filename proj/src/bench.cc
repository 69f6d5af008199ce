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

#include "tirsql/bench.h"

#include <cctype>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "tirsql/parallel.h"
#include "tirsql/tool_schema.h"

namespace tirsql {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::string_view kUserTemplateHead =
    "You are a helpful SQL expert assistant. You should first think about how "
    "to write the SQL query by analyzing the question, database schema, and "
    "external knowledge, then validate your SQL with the tool until it is "
    "correct. Finally, you provide the final SQL query in <answer> </answer>.\n"
    "\n"
    "Task Configuration\n"
    "Database Engine: SQLite\n";

constexpr std::string_view kUserTemplateTail =
    "Requirements\n"
    "1. Precision: Make sure you only output the information that is asked in "
    "the question. If the question asks for a specific column, make sure to "
    "only include that column in the SELECT clause, nothing more.\n"
    "2. Completeness: The generated query should return all of the "
    "information asked in the question without any missing or extra "
    "information.\n"
    "3. Correctness: Before generating the final SQL query, please think "
    "through the steps of how to write the query. Validate your SQL through "
    "tool testing.\n"
    "\n"
    "Output Format:\n"
    "Important: Use EITHER thinking + tool calls OR thinking + final answer. "
    "Do not mix the structures.\n"
    "\n"
    "Option A (when validation needed):\n"
    "<think> Your analysis... </think>\n"
    "[Tool calls for validation]\n"
    "\n"
    "Option B (final answer):\n"
    "<think> Your final analysis... </think>\n"
    "<answer> \n"
    "```sql\n"
    "YOUR_SQL_QUERY\n"
    "</answer>\n";

std::optional<std::string> string_field(const nlohmann::json& record,
                                        const char* key) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

TaskSample sample_from_record(const nlohmann::json& record, std::size_t index,
                              std::vector<std::string>& problems) {
  const std::string where = "record " + std::to_string(index);
  if (!record.is_object()) {
    problems.push_back(where + ": not a JSON object");
    return {};
  }
  TaskSample s;
  auto question = string_field(record, "question");
  auto db = string_field(record, "db_id");
  auto sql = string_field(record, "SQL");
  if (!sql) sql = string_field(record, "query");
  std::vector<std::string> missing;
  if (!question) missing.emplace_back("question");
  if (!db) missing.emplace_back("db_id");
  if (!sql) missing.emplace_back("SQL/query");
  if (!missing.empty()) {
    std::string msg = where + ": missing";
    for (const auto& m : missing) msg += " " + m;
    problems.push_back(msg);
    return {};
  }
  s.question = *question;
  s.db_name = *db;
  s.gold_sql = *sql;
  s.external_knowledge = string_field(record, "evidence").value_or("");
  s.difficulty = string_field(record, "difficulty");
  if (auto it = record.find("question_id");
      it != record.end() && (it->is_number_integer() || it->is_string())) {
    s.sample_id = it->is_string() ? it->get<std::string>() : it->dump();
  } else {
    s.sample_id = std::to_string(index);
  }
  static const std::set<std::string> kKnown = {
      "question", "db_id", "SQL", "query", "evidence", "difficulty",
      "question_id"};
  for (auto it = record.begin(); it != record.end(); ++it) {
    if (!kKnown.contains(it.key())) s.passthrough[it.key()] = it.value();
  }
  return s;
}

std::string quote_identifier(const std::string& name) {
  bool plain = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0]));
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') plain = false;
  }
  if (plain) return name;
  std::string out = "`";
  for (char c : name) {
    if (c == '`') out.push_back('`');
    out.push_back(c);
  }
  return out + "`";
}

std::string sql_string_literal(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  return out + "'";
}

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return "";
}

QueryResult require_result(ExecOutcome outcome, const std::string& what) {
  if (const auto* err = std::get_if<ExecError>(&outcome)) {
    throw std::runtime_error(what + ": " + err->message);
  }
  return std::get<QueryResult>(std::move(outcome));
}

}  // namespace

SchemaMismatch::SchemaMismatch(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "dataset schema mismatch";
        for (const auto& p : problems) msg += "; " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

std::vector<TaskSample> parse_dataset(std::string_view text) {
  std::vector<nlohmann::json> records;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  if (text[first] == '[') {
    auto parsed = nlohmann::json::parse(text, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array()) {
      throw SchemaMismatch({"file is not a valid JSON array"});
    }
    for (auto& r : parsed) records.push_back(std::move(r));
  } else {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded()) {
        throw SchemaMismatch(
            {"line " + std::to_string(line_no) + ": invalid JSON"});
      }
      records.push_back(std::move(parsed));
    }
  }
  std::vector<TaskSample> samples;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < records.size(); ++i) {
    samples.push_back(sample_from_record(records[i], i, problems));
  }
  if (!problems.empty()) throw SchemaMismatch(std::move(problems));
  return samples;
}

std::vector<TaskSample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

ojson sample_to_json(const TaskSample& s) {
  ojson out = {{"question_id", s.sample_id},
               {"db_id", s.db_name},
               {"question", s.question},
               {"evidence", s.external_knowledge},
               {"SQL", s.gold_sql}};
  if (s.difficulty) out["difficulty"] = *s.difficulty;
  for (auto it = s.passthrough.begin(); it != s.passthrough.end(); ++it) {
    out[it.key()] = it.value();
  }
  return out;
}

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::kEmptyResult:
      return "EmptyResult";
    case DropReason::kGoldError:
      return "GoldError";
    case DropReason::kUnknownDatabase:
      return "UnknownDatabase";
    case DropReason::kTimeout:
      return "Timeout";
  }
  return "GoldError";
}

DatasetFilterResult filter_dataset(const std::vector<TaskSample>& samples,
                                   const Sandbox& sandbox,
                                   std::size_t parallelism) {
  std::vector<std::optional<DroppedSample>> verdicts(samples.size());
  parallel_for(samples.size(), parallelism, [&](std::size_t i) {
    const TaskSample& s = samples[i];
    ExecOutcome outcome = sandbox.execute_all(s.db_name, s.gold_sql);
    if (const auto* err = std::get_if<ExecError>(&outcome)) {
      DropReason reason = DropReason::kGoldError;
      if (err->kind == ExecError::Kind::kUnknownDatabase) {
        reason = DropReason::kUnknownDatabase;
      } else if (err->kind == ExecError::Kind::kTimeout) {
        reason = DropReason::kTimeout;
      }
      verdicts[i] = DroppedSample{s, reason, err->message};
    } else if (std::get<QueryResult>(outcome).rows.empty()) {
      verdicts[i] =
          DroppedSample{s, DropReason::kEmptyResult, "gold query returned no rows"};
    }
  });
  DatasetFilterResult out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (verdicts[i]) {
      out.dropped.push_back(std::move(*verdicts[i]));
    } else {
      out.kept.push_back(samples[i]);
    }
  }
  return out;
}

std::string render_schema(const std::vector<TableInfo>& tables) {
  std::string out;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const TableInfo& table = tables[t];
    if (t > 0) out += "\n";
    out += "CREATE TABLE " + quote_identifier(table.name) + " (\n";
    std::vector<std::string> pk;
    for (const ColumnInfo& c : table.columns) {
      if (c.primary_key) pk.push_back(quote_identifier(c.name));
    }
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      const ColumnInfo& c = table.columns[i];
      out += "  " + quote_identifier(c.name);
      if (!c.type.empty()) out += " " + c.type;
      if (c.primary_key && pk.size() == 1) out += " PRIMARY KEY";
      if (i + 1 < table.columns.size() || pk.size() > 1) out += ",";
      out += "\n";
    }
    if (pk.size() > 1) {
      out += "  PRIMARY KEY (";
      for (std::size_t i = 0; i < pk.size(); ++i) {
        out += (i ? ", " : "") + pk[i];
      }
      out += ")\n";
    }
    out += ");\n";
    for (const ForeignKeyInfo& fk : table.foreign_keys) {
      out += "-- " + quote_identifier(table.name) + "." +
             quote_identifier(fk.column) + " references " +
             quote_identifier(fk.ref_table) + "." +
             quote_identifier(fk.ref_column) + "\n";
    }
  }
  return out;
}

SchemaDescription describe_schema(const Sandbox& sandbox,
                                  const std::string& db_name) {
  SchemaDescription schema;
  const QueryResult tables = require_result(
      sandbox.execute_all(db_name,
                          "SELECT name FROM sqlite_master WHERE type = 'table' "
                          "AND name NOT LIKE 'sqlite_%' ORDER BY rowid"),
      "reading catalog of " + db_name);
  for (const Row& row : tables.rows) {
    TableInfo table;
    table.name = cell_text(row.at(0));
    const std::string lit = sql_string_literal(table.name);
    const QueryResult cols = require_result(
        sandbox.execute_all(db_name, "SELECT name, type, pk FROM "
                                     "pragma_table_info(" + lit + ") ORDER BY cid"),
        "reading columns of " + table.name);
    for (const Row& c : cols.rows) {
      const auto* pk = std::get_if<std::int64_t>(&c.at(2));
      table.columns.push_back(
          {cell_text(c.at(0)), cell_text(c.at(1)), pk != nullptr && *pk > 0});
    }
    const QueryResult fks = require_result(
        sandbox.execute_all(db_name, "SELECT \"from\", \"table\", \"to\" FROM "
                                     "pragma_foreign_key_list(" + lit +
                                     ") ORDER BY id, seq"),
        "reading foreign keys of " + table.name);
    for (const Row& f : fks.rows) {
      table.foreign_keys.push_back(
          {cell_text(f.at(0)), cell_text(f.at(1)), cell_text(f.at(2))});
    }
    schema.tables.push_back(std::move(table));
  }
  schema.rendered = render_schema(schema.tables);
  return schema;
}

std::string render_question(const TaskSample& sample) {
  const std::string knowledge = trim(sample.external_knowledge);
  if (knowledge.empty()) return sample.question;
  return knowledge + " " + sample.question;
}

PromptPair build_prompt(const TaskSample& sample,
                        const SchemaDescription& schema) {
  PromptPair p;
  p.system = tool_system_prompt();
  std::string user(kUserTemplateHead);
  user += "Database: " + sample.db_name + "\n";
  user += "Database Schema:\n" + schema.rendered;
  if (!schema.rendered.empty() && schema.rendered.back() != '\n') user += "\n";
  user += "User Question: " + render_question(sample) + "\n\n";
  user += kUserTemplateTail;
  p.user = std::move(user);
  return p;
}

std::string fingerprint(const ojson& value) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : value.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

EvalReport evaluate(const std::vector<TaskSample>& samples,
                    PolicyEndpoint& policy, const SandboxClient& tools,
                    const Sandbox& grader, const EvalOptions& options) {
  RolloutConfig cfg = options.rollout;
  cfg.temperature = 0.0;
  cfg.group_size = 1;
  cfg.validate();

  std::map<std::string, std::optional<SchemaDescription>> schemas;
  std::mutex schema_mu;
  auto schema_for = [&](const std::string& db) -> std::optional<SchemaDescription> {
    std::lock_guard lock(schema_mu);
    auto it = schemas.find(db);
    if (it == schemas.end()) {
      std::optional<SchemaDescription> s;
      try {
        s = describe_schema(grader, db);
      } catch (const std::runtime_error&) {
      }
      it = schemas.emplace(db, std::move(s)).first;
    }
    return it->second;
  };

  EvalReport report;
  report.verdicts.resize(samples.size());
  parallel_for(samples.size(), options.parallelism, [&](std::size_t i) {
    const TaskSample& s = samples[i];
    SampleVerdict& v = report.verdicts[i];
    v.sample_id = s.sample_id;
    v.db_name = s.db_name;
    auto schema = schema_for(s.db_name);
    if (!schema) {
      v.termination = "Skipped";
      v.reason = "database schema unavailable";
      v.reward = compose_reward(false, false, false, options.reward);
      return;
    }
    PromptPair prompt = build_prompt(s, *schema);
    Trajectory traj = run_rollout({s.sample_id, s.db_name, prompt.system,
                                   prompt.user},
                                  policy, tools, cfg, cfg.seed);
    v.termination = std::string(to_string(traj.termination));
    v.turns_used = traj.turns_used;
    v.tool_calls = static_cast<int>(traj.tool_records.size());
    v.predicted_sql = final_answer_sql(traj).value_or("");
    if (traj.termination == Termination::kPolicyError) {
      v.reason = "policy error: " + traj.termination_detail;
    }
    try {
      v.reward = total_reward(traj, s.gold_sql, grader, options.reward);
      v.correct = v.reward.r_result > 0.0;
    } catch (const GoldExecutionFailed& e) {
      v.reason = e.what();
      v.reward = compose_reward(false, false, false, options.reward);
    }
  });
  report.n_samples = samples.size();
  for (const SampleVerdict& v : report.verdicts) report.n_correct += v.correct;
  report.ex_percent = report.n_samples == 0
                          ? 0.0
                          : 100.0 * static_cast<double>(report.n_correct) /
                                static_cast<double>(report.n_samples);
  report.config = options.config;
  report.fingerprint = fingerprint(options.config);
  return report;
}

ojson report_to_json(const EvalReport& report) {
  ojson verdicts = ojson::array();
  for (const SampleVerdict& v : report.verdicts) {
    verdicts.push_back({{"sample_id", v.sample_id},
                        {"db_name", v.db_name},
                        {"correct", v.correct},
                        {"predicted_sql", v.predicted_sql},
                        {"reward",
                         {{"r_format", v.reward.r_format},
                          {"r_exec", v.reward.r_exec},
                          {"r_result", v.reward.r_result},
                          {"total", v.reward.total},
                          {"answer_executes", v.reward.answer_executes},
                          {"details", v.reward.details}}},
                        {"termination", v.termination},
                        {"turns_used", v.turns_used},
                        {"tool_calls", v.tool_calls},
                        {"reason", v.reason}});
  }
  return ojson{{"n_samples", report.n_samples},
               {"n_correct", report.n_correct},
               {"ex_percent", report.ex_percent},
               {"fingerprint", report.fingerprint},
               {"config", report.config},
               {"verdicts", std::move(verdicts)}};
}

EvalReport report_from_json(const nlohmann::json& value) {
  EvalReport r;
  r.n_samples = value.at("n_samples").get<std::size_t>();
  r.n_correct = value.at("n_correct").get<std::size_t>();
  r.ex_percent = value.at("ex_percent").get<double>();
  r.fingerprint = value.at("fingerprint").get<std::string>();
  r.config = value.at("config");
  for (const auto& v : value.at("verdicts")) {
    SampleVerdict s;
    s.sample_id = v.at("sample_id").get<std::string>();
    s.db_name = v.at("db_name").get<std::string>();
    s.correct = v.at("correct").get<bool>();
    s.predicted_sql = v.at("predicted_sql").get<std::string>();
    const auto& rw = v.at("reward");
    s.reward.r_format = rw.at("r_format").get<double>();
    s.reward.r_exec = rw.at("r_exec").get<double>();
    s.reward.r_result = rw.at("r_result").get<double>();
    s.reward.total = rw.at("total").get<double>();
    s.reward.answer_executes = rw.at("answer_executes").get<bool>();
    s.reward.details = rw.at("details").get<std::vector<std::string>>();
    s.termination = v.at("termination").get<std::string>();
    s.turns_used = v.at("turns_used").get<int>();
    s.tool_calls = v.at("tool_calls").get<int>();
    s.reason = v.at("reason").get<std::string>();
    r.verdicts.push_back(std::move(s));
  }
  return r;
}

std::string report_markdown(const EvalReport& report,
                            const std::string& paradigm) {
  std::ostringstream out;
  out << "| Paradigm | EX (%) |\n";
  out << "|---|---|\n";
  out << "| " << paradigm << " | " << std::fixed << std::setprecision(1)
      << report.ex_percent << " |\n";
  return out.str();
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir,
                 const std::string& paradigm) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream json(dir / "report.json", std::ios::binary);
    json << report_to_json(report).dump(2) << '\n';
    if (!json) throw std::runtime_error("cannot write report.json");
  }
  std::ofstream md(dir / "report.md", std::ios::binary);
  md << report_markdown(report, paradigm);
  if (!md) throw std::runtime_error("cannot write report.md");
}

}  // namespace tirsql
