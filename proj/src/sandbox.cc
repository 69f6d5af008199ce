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

#include "tirsql/sandbox.h"

#include <sqlite3.h>

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace tirsql {
namespace {

using Clock = std::chrono::steady_clock;

struct ConnectionCloser {
  void operator()(sqlite3* db) const { sqlite3_close_v2(db); }
};
struct StatementFinalizer {
  void operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }
};
using Connection = std::unique_ptr<sqlite3, ConnectionCloser>;
using Statement = std::unique_ptr<sqlite3_stmt, StatementFinalizer>;

struct Deadline {
  Clock::time_point at;
};

int progress_callback(void* arg) {
  const auto* deadline = static_cast<const Deadline*>(arg);
  return Clock::now() >= deadline->at ? 1 : 0;
}

int authorizer(void*, int action, const char*, const char*, const char*,
               const char*) {
  switch (action) {
    case SQLITE_ATTACH:
    case SQLITE_DETACH:
      return SQLITE_DENY;
    default:
      return SQLITE_OK;
  }
}

bool valid_db_name(std::string_view name) {
  if (name.empty() || name == "." || name == "..") return false;
  return name.find_first_of("/\\") == std::string_view::npos &&
         name.find('\0') == std::string_view::npos;
}

std::string to_hex(const void* data, int size) {
  static constexpr char kDigits[] = "0123456789abcdef";
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::string out;
  out.reserve(static_cast<std::size_t>(size) * 2);
  for (int i = 0; i < size; ++i) {
    out.push_back(kDigits[bytes[i] >> 4]);
    out.push_back(kDigits[bytes[i] & 0xF]);
  }
  return out;
}

Cell read_cell(sqlite3_stmt* stmt, int col) {
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_INTEGER:
      return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
    case SQLITE_FLOAT:
      return sqlite3_column_double(stmt, col);
    case SQLITE_TEXT: {
      const auto* text =
          reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
      return std::string(text, static_cast<std::size_t>(
                                   sqlite3_column_bytes(stmt, col)));
    }
    case SQLITE_BLOB: {
      const void* blob = sqlite3_column_blob(stmt, col);
      return BlobHex{to_hex(blob, sqlite3_column_bytes(stmt, col))};
    }
    default:
      return std::monostate{};
  }
}

ExecError timeout_error(std::chrono::milliseconds limit) {
  return {ExecError::Kind::kTimeout, "query exceeded the timeout of " +
                                         std::to_string(limit.count()) +
                                         " ms"};
}

}  // namespace

std::string_view to_string(ExecError::Kind kind) {
  switch (kind) {
    case ExecError::Kind::kSqlError:
      return "SqlError";
    case ExecError::Kind::kTimeout:
      return "Timeout";
    case ExecError::Kind::kUnknownDatabase:
      return "UnknownDatabase";
    case ExecError::Kind::kForbidden:
      return "Forbidden";
  }
  return "SqlError";
}

std::optional<ExecError::Kind> exec_error_kind_from_string(std::string_view s) {
  for (auto kind : {ExecError::Kind::kSqlError, ExecError::Kind::kTimeout,
                    ExecError::Kind::kUnknownDatabase,
                    ExecError::Kind::kForbidden}) {
    if (to_string(kind) == s) return kind;
  }
  return std::nullopt;
}

void SandboxConfig::validate() const {
  if (timeout.count() <= 0) {
    throw std::invalid_argument("sandbox timeout must be positive");
  }
  if (row_limit == 0) {
    throw std::invalid_argument("sandbox row_limit must be at least 1");
  }
}

Sandbox::Sandbox(SandboxConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::optional<std::filesystem::path> Sandbox::database_path(
    std::string_view db_name) const {
  if (!valid_db_name(db_name)) return std::nullopt;
  const std::string file = std::string(db_name) + ".sqlite";
  std::error_code ec;
  for (const auto& candidate :
       {cfg_.db_root / file, cfg_.db_root / std::string(db_name) / file}) {
    if (std::filesystem::is_regular_file(candidate, ec)) return candidate;
  }
  return std::nullopt;
}

ExecOutcome Sandbox::execute(const std::string& db_name,
                             const std::string& sql) const {
  return run(db_name, sql, cfg_.row_limit);
}

ExecOutcome Sandbox::execute_all(const std::string& db_name,
                                 const std::string& sql) const {
  return run(db_name, sql, std::nullopt);
}

ExecOutcome Sandbox::run(const std::string& db_name, const std::string& sql,
                         std::optional<std::size_t> row_limit) const {
  const auto started = Clock::now();
  auto path = database_path(db_name);
  if (!path) {
    return ExecError{ExecError::Kind::kUnknownDatabase,
                     "no database named '" + db_name + "'"};
  }

  sqlite3* raw = nullptr;
  const int flags = (cfg_.read_only ? SQLITE_OPEN_READONLY
                                    : SQLITE_OPEN_READWRITE) |
                    SQLITE_OPEN_NOMUTEX;
  int rc = sqlite3_open_v2(path->c_str(), &raw, flags, nullptr);
  Connection db(raw);
  if (rc != SQLITE_OK) {
    return ExecError{ExecError::Kind::kSqlError,
                     raw ? sqlite3_errmsg(raw) : "cannot open database"};
  }
  sqlite3_busy_timeout(db.get(), static_cast<int>(cfg_.timeout.count()));
  sqlite3_set_authorizer(db.get(), authorizer, nullptr);
  Deadline deadline{started + cfg_.timeout};
  sqlite3_progress_handler(db.get(), 1000, progress_callback, &deadline);

  sqlite3_stmt* raw_stmt = nullptr;
  const char* tail = nullptr;
  rc = sqlite3_prepare_v2(db.get(), sql.c_str(), static_cast<int>(sql.size()),
                          &raw_stmt, &tail);
  Statement stmt(raw_stmt);
  if (rc == SQLITE_AUTH) {
    return ExecError{ExecError::Kind::kForbidden, sqlite3_errmsg(db.get())};
  }
  if (rc == SQLITE_INTERRUPT) return timeout_error(cfg_.timeout);
  if (rc != SQLITE_OK) {
    return ExecError{ExecError::Kind::kSqlError, sqlite3_errmsg(db.get())};
  }
  if (!stmt) {
    return ExecError{ExecError::Kind::kSqlError, "empty query"};
  }
  {
    // Anything after the first statement must be whitespace or comments.
    sqlite3_stmt* next = nullptr;
    const int remaining =
        static_cast<int>(sql.size() - static_cast<std::size_t>(tail - sql.c_str()));
    int trc = sqlite3_prepare_v2(db.get(), tail, remaining, &next, nullptr);
    Statement guard(next);
    if (trc != SQLITE_OK || next != nullptr) {
      return ExecError{ExecError::Kind::kSqlError,
                       "You can only execute one statement at a time."};
    }
  }
  if (cfg_.read_only && !sqlite3_stmt_readonly(stmt.get())) {
    return ExecError{ExecError::Kind::kForbidden,
                     "statement would modify the database"};
  }

  QueryResult result;
  result.row_limit = row_limit.value_or(0);
  const int ncols = sqlite3_column_count(stmt.get());
  result.columns.reserve(static_cast<std::size_t>(ncols));
  for (int c = 0; c < ncols; ++c) {
    const char* name = sqlite3_column_name(stmt.get(), c);
    result.columns.emplace_back(name ? name : "");
  }

  while (true) {
    rc = sqlite3_step(stmt.get());
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) {
      if (rc == SQLITE_INTERRUPT) return timeout_error(cfg_.timeout);
      return ExecError{ExecError::Kind::kSqlError, sqlite3_errmsg(db.get())};
    }
    if (row_limit && result.rows.size() == *row_limit) {
      result.truncated = true;
      break;
    }
    Row row;
    row.reserve(static_cast<std::size_t>(ncols));
    for (int c = 0; c < ncols; ++c) row.push_back(read_cell(stmt.get(), c));
    result.rows.push_back(std::move(row));
  }
  result.elapsed_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - started).count();
  return result;
}

ExecOutcome execute_query(const std::string& db_name, const std::string& sql,
                          const SandboxConfig& cfg) {
  return Sandbox(cfg).execute(db_name, sql);
}

std::vector<std::string> unique_column_keys(
    const std::vector<std::string>& columns) {
  std::vector<std::string> keys;
  keys.reserve(columns.size());
  std::unordered_map<std::string, int> seen;
  std::unordered_set<std::string> used;
  for (const std::string& c : columns) {
    int& n = seen[c];
    if (n == 0) n = 1;
    std::string key = c;
    // Suffixes skip names that are already taken, literal or generated.
    while (used.contains(key)) key = c + "_" + std::to_string(++n);
    used.insert(key);
    keys.push_back(std::move(key));
  }
  return keys;
}

nlohmann::ordered_json cell_to_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, BlobHex>) {
          return v.hex;
        } else {
          return v;
        }
      },
      cell);
}

nlohmann::ordered_json tool_payload(const ExecOutcome& outcome) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  if (const auto* err = std::get_if<ExecError>(&outcome)) {
    out["error"] = std::string(to_string(err->kind)) + ": " + err->message;
    return out;
  }
  const auto& result = std::get<QueryResult>(outcome);
  const auto keys = unique_column_keys(result.columns);
  out["columns"] = result.columns;
  auto data = nlohmann::ordered_json::array();
  for (const Row& row : result.rows) {
    auto obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      obj[keys[c]] = cell_to_json(row[c]);
    }
    data.push_back(std::move(obj));
  }
  out["data"] = std::move(data);
  return out;
}

ExecOutcome outcome_from_payload(const nlohmann::json& payload) {
  if (!payload.is_object()) {
    return ExecError{ExecError::Kind::kSqlError, "malformed tool payload"};
  }
  if (auto it = payload.find("error"); it != payload.end()) {
    std::string text = it->is_string() ? it->get<std::string>() : it->dump();
    auto sep = text.find(": ");
    if (sep != std::string::npos) {
      if (auto kind = exec_error_kind_from_string(text.substr(0, sep))) {
        return ExecError{*kind, text.substr(sep + 2)};
      }
    }
    return ExecError{ExecError::Kind::kSqlError, text};
  }
  QueryResult result;
  result.row_limit = 0;
  for (const auto& c : payload.value("columns", nlohmann::json::array())) {
    result.columns.push_back(c.get<std::string>());
  }
  const auto keys = unique_column_keys(result.columns);
  for (const auto& obj : payload.value("data", nlohmann::json::array())) {
    Row row;
    for (const auto& key : keys) {
      auto it = obj.find(key);
      if (it == obj.end() || it->is_null()) {
        row.emplace_back(std::monostate{});
      } else if (it->is_number_integer()) {
        row.emplace_back(it->get<std::int64_t>());
      } else if (it->is_number()) {
        row.emplace_back(it->get<double>());
      } else if (it->is_string()) {
        row.emplace_back(it->get<std::string>());
      } else {
        row.emplace_back(it->dump());
      }
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string dump_spaced(const nlohmann::ordered_json& value) {
  if (value.is_object()) {
    std::string out = "{";
    bool first = true;
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (!first) out += ", ";
      first = false;
      out += nlohmann::ordered_json(it.key()).dump();
      out += ": ";
      out += dump_spaced(it.value());
    }
    return out + "}";
  }
  if (value.is_array()) {
    std::string out = "[";
    bool first = true;
    for (const auto& v : value) {
      if (!first) out += ", ";
      first = false;
      out += dump_spaced(v);
    }
    return out + "]";
  }
  return value.dump(-1, ' ', false,
                    nlohmann::ordered_json::error_handler_t::replace);
}

std::string render_tool_response(const ExecOutcome& outcome) {
  return "The result is: " + dump_spaced(tool_payload(outcome));
}

}  // namespace tirsql
