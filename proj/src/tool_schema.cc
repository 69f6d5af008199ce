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

#include "tirsql/tool_schema.h"

namespace tirsql {
namespace {

constexpr std::string_view kToolsBlock = R"TOOLS(<tools>
  {"name": "sql-execute_sql_query", "description": "Execute SQL query and return partial results containing column names (maximum 10 records).
    
    Args:db_name (str): The name of the database.
      sql (str): The SQL query to execute.
    
    Returns:Dict[str, Union[List[Dict], Dict, None]]: A dictionary containing 'columns' and 'data' of the query (maximum of 10 records).
    
    Raises: TimeoutError: If the query execution exceeds the timeout.
      sqlite3.Error: If an error occurs during the query execution.
    ", 
    "parameters": {
      "type": "object", 
      "properties": {
        "db_name": {"title": "Db Name", "type": "string"}, 
        "sql": {"title": "Sql", "type": "string"}
      }, 
      "required": ["db_name", "sql"]
    }
}
</tools>)TOOLS";

}  // namespace

std::string_view tools_block() { return kToolsBlock; }

std::string escape_raw_newlines_in_strings(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  bool escaped = false;
  for (char c : text) {
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      } else if (c == '\n') {
        out += "\\n";
        continue;
      } else if (c == '\r') {
        out += "\\r";
        continue;
      } else if (c == '\t') {
        out += "\\t";
        continue;
      }
    } else if (c == '"') {
      in_string = true;
    }
    out.push_back(c);
  }
  return out;
}

nlohmann::ordered_json tool_schema() {
  std::string_view body = kToolsBlock;
  constexpr std::string_view kOpen = "<tools>";
  constexpr std::string_view kClose = "</tools>";
  body.remove_prefix(kOpen.size());
  body.remove_suffix(kClose.size());
  return nlohmann::ordered_json::parse(escape_raw_newlines_in_strings(body));
}

std::string tool_system_prompt() {
  std::string out;
  out += "## Tools\n\n";
  out += "You may call one or more functions to assist with the user query.\n\n";
  out += "You are provided with function signatures within <tools></tools> XML "
         "tags:\n";
  out += kToolsBlock;
  out += "\n\n";
  out += "For each function call, return a JSON object with function name and "
         "arguments within <tool_call></tool_call> XML tags:\n";
  out += "<tool_call>\n";
  out += "  {\"name\": <function-name>, \"arguments\": <args-json-object>}\n";
  out += "</tool_call>";
  return out;
}

}  // namespace tirsql
