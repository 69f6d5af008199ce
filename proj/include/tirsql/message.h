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

#ifndef TIRSQL_MESSAGE_H_
#define TIRSQL_MESSAGE_H_

#include <string>
#include <string_view>

namespace tirsql {

enum class Role { kSystem, kUser, kAssistant };

// Who produced a message. Tool feedback and rethink prompts are carried as
// kUser messages with kEnvironment origin.
enum class Origin { kPrompt, kPolicy, kEnvironment };

struct Message {
  Role role = Role::kUser;
  std::string text;
  Origin origin = Origin::kPrompt;

  bool operator==(const Message&) const = default;

  static Message system(std::string text) {
    return {Role::kSystem, std::move(text), Origin::kPrompt};
  }
  static Message user(std::string text) {
    return {Role::kUser, std::move(text), Origin::kPrompt};
  }
  static Message assistant(std::string text) {
    return {Role::kAssistant, std::move(text), Origin::kPolicy};
  }
  static Message environment(std::string text) {
    return {Role::kUser, std::move(text), Origin::kEnvironment};
  }
};

std::string_view to_string(Role role);
std::string_view to_string(Origin origin);
Role role_from_string(std::string_view s);
Origin origin_from_string(std::string_view s);

}  // namespace tirsql

#endif  // TIRSQL_MESSAGE_H_
