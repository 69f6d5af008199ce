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

#ifndef TIRSQL_SANDBOX_H_
#define TIRSQL_SANDBOX_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace tirsql {

// Blob cells travel as lowercase hex.
struct BlobHex {
  std::string hex;
  bool operator==(const BlobHex&) const = default;
  auto operator<=>(const BlobHex&) const = default;
};

using Cell = std::variant<std::monostate, std::int64_t, double, std::string,
                          BlobHex>;
using Row = std::vector<Cell>;

struct QueryResult {
  std::vector<std::string> columns;
  std::vector<Row> rows;
  bool truncated = false;
  std::size_t row_limit = 10;
  double elapsed_ms = 0.0;

  // Compares everything but timing.
  bool same_data(const QueryResult& other) const {
    return columns == other.columns && rows == other.rows &&
           truncated == other.truncated && row_limit == other.row_limit;
  }
};

struct ExecError {
  enum class Kind { kSqlError, kTimeout, kUnknownDatabase, kForbidden };
  Kind kind = Kind::kSqlError;
  std::string message;

  bool operator==(const ExecError&) const = default;
};

std::string_view to_string(ExecError::Kind kind);
std::optional<ExecError::Kind> exec_error_kind_from_string(std::string_view s);

using ExecOutcome = std::variant<QueryResult, ExecError>;

inline bool succeeded(const ExecOutcome& o) {
  return std::holds_alternative<QueryResult>(o);
}

struct SandboxConfig {
  std::filesystem::path db_root;
  std::chrono::milliseconds timeout{30000};
  std::size_t row_limit = 10;
  bool read_only = true;

  // Throws std::invalid_argument on timeout <= 0 or row_limit == 0.
  void validate() const;
};

// Anything the rollout loop can send tool calls to.
class SandboxClient {
 public:
  virtual ~SandboxClient() = default;
  virtual ExecOutcome execute(const std::string& db_name,
                              const std::string& sql) const = 0;
};

// In-process SQLite executor. Every call opens its own connection, so one
// instance may be shared freely across threads.
class Sandbox : public SandboxClient {
 public:
  explicit Sandbox(SandboxConfig cfg);

  const SandboxConfig& config() const { return cfg_; }

  // Returns at most config().row_limit rows.
  ExecOutcome execute(const std::string& db_name,
                      const std::string& sql) const override;

  // Same contract without the row cap; used for grading.
  ExecOutcome execute_all(const std::string& db_name,
                          const std::string& sql) const;

  std::optional<std::filesystem::path> database_path(
      std::string_view db_name) const;

 private:
  ExecOutcome run(const std::string& db_name, const std::string& sql,
                  std::optional<std::size_t> row_limit) const;

  SandboxConfig cfg_;
};

// Convenience for the common case.
ExecOutcome execute_query(const std::string& db_name, const std::string& sql,
                          const SandboxConfig& cfg);

// Column names made unique by suffixing "_2", "_3", ... to repeats.
std::vector<std::string> unique_column_keys(
    const std::vector<std::string>& columns);

// {"columns": [...], "data": [{col: val, ...}, ...]} or {"error": "Kind: msg"}.
nlohmann::ordered_json tool_payload(const ExecOutcome& outcome);

// Parses a payload produced by tool_payload back into an outcome. Cell types
// are recovered from JSON types; blobs come back as text.
ExecOutcome outcome_from_payload(const nlohmann::json& payload);

// JSON text with ", " and ": " separators and keys in insertion order.
std::string dump_spaced(const nlohmann::ordered_json& value);

// "The result is: " followed by the spaced payload.
std::string render_tool_response(const ExecOutcome& outcome);

nlohmann::ordered_json cell_to_json(const Cell& cell);

}  // namespace tirsql

#endif  // TIRSQL_SANDBOX_H_
