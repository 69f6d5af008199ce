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

#ifndef TIRSQL_BENCH_H_
#define TIRSQL_BENCH_H_

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirsql/policy.h"
#include "tirsql/reward.h"
#include "tirsql/rollout.h"
#include "tirsql/sandbox.h"

namespace tirsql {

struct TaskSample {
  std::string sample_id;
  std::string db_name;
  std::string question;
  std::string external_knowledge;
  std::string gold_sql;
  std::optional<std::string> difficulty;
  // Record fields that have no dedicated slot, in file order.
  nlohmann::ordered_json passthrough = nlohmann::ordered_json::object();
};

class SchemaMismatch : public std::runtime_error {
 public:
  explicit SchemaMismatch(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// BIRD/SPIDER-style records, as a JSON array or one object per line.
// question and db_id are required, plus SQL (BIRD) or query (SPIDER);
// evidence becomes external_knowledge. sample_id comes from question_id when
// present, else the record index. Throws SchemaMismatch.
std::vector<TaskSample> parse_dataset(std::string_view text);
std::vector<TaskSample> load_dataset(const std::filesystem::path& path);

nlohmann::ordered_json sample_to_json(const TaskSample& sample);

enum class DropReason { kEmptyResult, kGoldError, kUnknownDatabase, kTimeout };

std::string_view to_string(DropReason reason);

struct DroppedSample {
  TaskSample sample;
  DropReason reason = DropReason::kGoldError;
  std::string detail;
};

struct DatasetFilterResult {
  std::vector<TaskSample> kept;
  std::vector<DroppedSample> dropped;
};

// Runs every gold query and drops the ones that fail, time out or return no
// rows. Input order is preserved in both lists.
DatasetFilterResult filter_dataset(const std::vector<TaskSample>& samples,
                                   const Sandbox& sandbox,
                                   std::size_t parallelism = 8);

struct ColumnInfo {
  std::string name;
  std::string type;
  bool primary_key = false;
};

struct ForeignKeyInfo {
  std::string column;
  std::string ref_table;
  std::string ref_column;
};

struct TableInfo {
  std::string name;
  std::vector<ColumnInfo> columns;
  std::vector<ForeignKeyInfo> foreign_keys;
};

struct SchemaDescription {
  std::vector<TableInfo> tables;
  std::string rendered;
};

// CREATE TABLE text for each table in catalog order, followed by one comment
// line per foreign key.
std::string render_schema(const std::vector<TableInfo>& tables);

// Reads the catalog through the sandbox. Throws std::runtime_error if the
// database cannot be read.
SchemaDescription describe_schema(const Sandbox& sandbox,
                                  const std::string& db_name);

// "<knowledge> <question>", or just the question when there is no knowledge.
std::string render_question(const TaskSample& sample);

struct PromptPair {
  std::string system;
  std::string user;
};

PromptPair build_prompt(const TaskSample& sample,
                        const SchemaDescription& schema);

struct SampleVerdict {
  std::string sample_id;
  std::string db_name;
  bool correct = false;
  std::string predicted_sql;
  RewardBreakdown reward;
  std::string termination;
  int turns_used = 0;
  int tool_calls = 0;
  std::string reason;
};

struct EvalReport {
  std::size_t n_samples = 0;
  std::size_t n_correct = 0;
  double ex_percent = 0.0;
  std::vector<SampleVerdict> verdicts;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::string fingerprint;
};

struct EvalOptions {
  // Temperature is forced to 0 and group size to 1.
  RolloutConfig rollout;
  RewardConfig reward;
  std::size_t parallelism = 8;
  // Echoed into the report together with its fingerprint.
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

// One greedy rollout per sample; a sample is correct when the result reward
// is positive. Tool calls go to `tools`; grading uses `grader`.
EvalReport evaluate(const std::vector<TaskSample>& samples,
                    PolicyEndpoint& policy, const SandboxClient& tools,
                    const Sandbox& grader, const EvalOptions& options);

// 16 hex digits of FNV-1a over the compact JSON text.
std::string fingerprint(const nlohmann::ordered_json& value);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& value);

// Two-row markdown table: | Paradigm | EX (%) |.
std::string report_markdown(const EvalReport& report,
                            const std::string& paradigm);

// Writes <dir>/report.json and <dir>/report.md. Throws std::runtime_error on
// I/O failures.
void emit_report(const EvalReport& report, const std::filesystem::path& dir,
                 const std::string& paradigm = "TIR-SQL (mock)");

}  // namespace tirsql

#endif  // TIRSQL_BENCH_H_
