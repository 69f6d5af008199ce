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

#ifndef TIRSQL_TOOL_SCHEMA_H_
#define TIRSQL_TOOL_SCHEMA_H_

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace tirsql {

// The <tools>...</tools> block shown to the policy, byte for byte. The
// description string spans several raw lines, so the block is not strict JSON.
std::string_view tools_block();

// The tool schema as strict JSON (newlines inside strings escaped).
nlohmann::ordered_json tool_schema();

// Tool-use system prompt wrapping tools_block().
std::string tool_system_prompt();

// Escapes raw control characters that appear inside JSON string literals so
// that loosely written JSON parses.
std::string escape_raw_newlines_in_strings(std::string_view text);

}  // namespace tirsql

#endif  // TIRSQL_TOOL_SCHEMA_H_
