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

#ifndef TIRSQL_POLICY_H_
#define TIRSQL_POLICY_H_

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirsql/message.h"

namespace tirsql {

inline constexpr const char* kEosToken = "<|im_end|>";

struct SamplingParams {
  double temperature = 0.6;
  int max_tokens = 8192;
  std::vector<std::string> stop;
  std::optional<std::uint64_t> seed;
};

struct PolicyRequest {
  std::vector<Message> messages;
  SamplingParams sampling;
};

struct TokenLogprob {
  std::int64_t token_id = -1;
  double logprob = 0.0;
};

struct PolicyReply {
  std::string text;
  // Per generated token, when the endpoint reports them.
  std::optional<std::vector<TokenLogprob>> tokens;
  std::string finish_reason = "stop";
};

// Endpoint could not be reached or answered with a server-side failure.
class PolicyUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Endpoint refused the request because the context is too long.
class ContextOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A chat-completion style generator. Implementations must be safe to call
// from several rollout threads at once.
class PolicyEndpoint {
 public:
  virtual ~PolicyEndpoint() = default;

  // Throws PolicyUnavailable or ContextOverflow.
  virtual PolicyReply generate(const PolicyRequest& request) = 0;

  // Token ids for a piece of non-generated text, if the endpoint exposes a
  // tokenizer.
  virtual std::optional<std::vector<std::int64_t>> tokenize(
      const std::string& text);
};

struct HttpPolicyConfig {
  // Base URL of an OpenAI-compatible server, e.g. http://127.0.0.1:8000.
  std::string base_url;
  std::string model = "default";
  // Sent as a bearer token when non-empty. Read from the environment by the
  // CLI, never from flags.
  std::string api_key;
  std::chrono::milliseconds timeout{120000};
  bool request_logprobs = true;
};

// Client for POST {base_url}/v1/chat/completions.
class HttpChatPolicy : public PolicyEndpoint {
 public:
  explicit HttpChatPolicy(HttpPolicyConfig cfg);

  PolicyReply generate(const PolicyRequest& request) override;
  std::optional<std::vector<std::int64_t>> tokenize(
      const std::string& text) override;

 private:
  HttpPolicyConfig cfg_;
};

// Request body sent to a chat-completions endpoint.
nlohmann::json build_chat_request(const PolicyRequest& request,
                                  const HttpPolicyConfig& cfg);

// Parses a chat-completions response. Stop strings are not echoed by most
// servers, so an unterminated <tool_call> block gets its close tag restored.
// Throws PolicyUnavailable on malformed bodies.
PolicyReply parse_chat_response(const nlohmann::json& body);

// Appends the matching close tag when `text` ends inside a <tool_call> block.
std::string restore_stop_tag(std::string text);

}  // namespace tirsql

#endif  // TIRSQL_POLICY_H_
