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

#include "tirsql/policy.h"

#include <algorithm>
#include <cctype>

#include "httplib.h"
#include "tirsql/protocol.h"

namespace tirsql {
namespace {

std::int64_t parse_token_id(const nlohmann::json& entry) {
  if (auto it = entry.find("token_id");
      it != entry.end() && it->is_number_integer()) {
    return it->get<std::int64_t>();
  }
  // vLLM with return_tokens_as_token_ids reports tokens as "token_id:<n>".
  constexpr std::string_view kPrefix = "token_id:";
  std::string token = entry.value("token", "");
  if (token.starts_with(kPrefix)) {
    try {
      return std::stoll(token.substr(kPrefix.size()));
    } catch (const std::exception&) {
    }
  }
  return -1;
}

bool looks_like_context_overflow(const std::string& body) {
  std::string lower = body;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return lower.find("context length") != std::string::npos ||
         lower.find("context_length") != std::string::npos ||
         lower.find("maximum context") != std::string::npos ||
         lower.find("too long") != std::string::npos;
}

}  // namespace

std::optional<std::vector<std::int64_t>> PolicyEndpoint::tokenize(
    const std::string&) {
  return std::nullopt;
}

std::string restore_stop_tag(std::string text) {
  const auto open = open_tag(SegmentKind::kToolCall);
  const auto close = close_tag(SegmentKind::kToolCall);
  auto last_open = text.rfind(open);
  if (last_open == std::string::npos) return text;
  if (text.find(close, last_open) == std::string::npos) text.append(close);
  return text;
}

nlohmann::json build_chat_request(const PolicyRequest& request,
                                  const HttpPolicyConfig& cfg) {
  nlohmann::json messages = nlohmann::json::array();
  for (const Message& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
  }
  nlohmann::json body = {
      {"model", cfg.model},
      {"messages", std::move(messages)},
      {"temperature", request.sampling.temperature},
      {"max_tokens", request.sampling.max_tokens},
      {"stop", request.sampling.stop},
  };
  if (request.sampling.seed) body["seed"] = *request.sampling.seed;
  if (cfg.request_logprobs) {
    body["logprobs"] = true;
    body["return_tokens_as_token_ids"] = true;
  }
  body["include_stop_str_in_output"] = true;
  return body;
}

PolicyReply parse_chat_response(const nlohmann::json& body) {
  auto choices = body.find("choices");
  if (choices == body.end() || !choices->is_array() || choices->empty()) {
    throw PolicyUnavailable("chat response has no choices");
  }
  const auto& choice = (*choices)[0];
  PolicyReply reply;
  const auto& message = choice.value("message", nlohmann::json::object());
  auto content = message.find("content");
  if (content == message.end() || !content->is_string()) {
    throw PolicyUnavailable("chat response has no message content");
  }
  reply.text = content->get<std::string>();
  if (auto fr = choice.find("finish_reason"); fr != choice.end() && fr->is_string()) {
    reply.finish_reason = fr->get<std::string>();
  }
  if (reply.finish_reason == "stop") reply.text = restore_stop_tag(reply.text);

  auto logprobs = choice.find("logprobs");
  if (logprobs != choice.end() && logprobs->is_object()) {
    auto entries = logprobs->find("content");
    if (entries != logprobs->end() && entries->is_array()) {
      std::vector<TokenLogprob> tokens;
      tokens.reserve(entries->size());
      for (const auto& e : *entries) {
        tokens.push_back({parse_token_id(e), e.value("logprob", 0.0)});
      }
      reply.tokens = std::move(tokens);
    }
  }
  return reply;
}

HttpChatPolicy::HttpChatPolicy(HttpPolicyConfig cfg) : cfg_(std::move(cfg)) {
  while (!cfg_.base_url.empty() && cfg_.base_url.back() == '/') {
    cfg_.base_url.pop_back();
  }
}

PolicyReply HttpChatPolicy::generate(const PolicyRequest& request) {
  httplib::Client client(cfg_.base_url);
  client.set_read_timeout(cfg_.timeout);
  client.set_connection_timeout(std::chrono::seconds(5));
  if (!cfg_.api_key.empty()) client.set_bearer_token_auth(cfg_.api_key);

  auto res = client.Post("/v1/chat/completions",
                         build_chat_request(request, cfg_).dump(),
                         "application/json");
  if (!res) {
    throw PolicyUnavailable("policy endpoint unreachable: " +
                            httplib::to_string(res.error()));
  }
  if (res->status >= 400) {
    if (res->status == 400 && looks_like_context_overflow(res->body)) {
      throw ContextOverflow(res->body);
    }
    throw PolicyUnavailable("policy endpoint returned HTTP " +
                            std::to_string(res->status) + ": " + res->body);
  }
  auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded()) {
    throw PolicyUnavailable("policy endpoint returned a non-JSON body");
  }
  return parse_chat_response(body);
}

std::optional<std::vector<std::int64_t>> HttpChatPolicy::tokenize(
    const std::string& text) {
  httplib::Client client(cfg_.base_url);
  client.set_read_timeout(cfg_.timeout);
  if (!cfg_.api_key.empty()) client.set_bearer_token_auth(cfg_.api_key);
  nlohmann::json body = {
      {"model", cfg_.model}, {"prompt", text}, {"add_special_tokens", false}};
  auto res = client.Post("/tokenize", body.dump(), "application/json");
  if (!res || res->status != 200) return std::nullopt;
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("tokens")) return std::nullopt;
  try {
    return parsed["tokens"].get<std::vector<std::int64_t>>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

}  // namespace tirsql
