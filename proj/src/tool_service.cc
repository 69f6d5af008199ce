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

#include "tirsql/tool_service.h"

#include <stdexcept>

#include "httplib.h"
#include "tirsql/tool_schema.h"

namespace tirsql {

BindAddress parse_bind_address(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw std::invalid_argument("bind address must look like host:port, got '" +
                                text + "'");
  }
  BindAddress addr;
  addr.host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    addr.port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid port in '" + text + "'");
  }
  if (addr.port < 0 || addr.port > 65535) {
    throw std::invalid_argument("port out of range in '" + text + "'");
  }
  return addr;
}

HttpReply handle_list_tools() {
  return {200, dump_spaced(tool_schema())};
}

HttpReply handle_execute_sql(const Sandbox& sandbox, const std::string& body) {
  auto request = nlohmann::json::parse(body, nullptr, false);
  if (request.is_discarded() || !request.is_object()) {
    return {400, R"({"error": "request body must be a JSON object"})"};
  }
  auto db = request.find("db_name");
  auto sql = request.find("sql");
  if (db == request.end() || !db->is_string() || sql == request.end() ||
      !sql->is_string()) {
    return {400, R"({"error": "db_name and sql are required strings"})"};
  }
  ExecOutcome outcome =
      sandbox.execute(db->get<std::string>(), sql->get<std::string>());
  return {200, dump_spaced(tool_payload(outcome))};
}

ToolService::ToolService(SandboxConfig cfg)
    : sandbox_(std::move(cfg)), server_(std::make_unique<httplib::Server>()) {
  server_->Get("/tools", [](const httplib::Request&, httplib::Response& res) {
    HttpReply reply = handle_list_tools();
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  server_->Post("/tools/execute_sql_query",
                [this](const httplib::Request& req, httplib::Response& res) {
                  HttpReply reply = handle_execute_sql(sandbox_, req.body);
                  res.status = reply.status;
                  res.set_content(reply.body, "application/json");
                });
}

ToolService::~ToolService() { stop(); }

int ToolService::bind(const BindAddress& address) {
  if (address.port == 0) {
    return server_->bind_to_any_port(address.host);
  }
  return server_->bind_to_port(address.host, address.port) ? address.port : -1;
}

bool ToolService::listen() { return server_->listen_after_bind(); }

void ToolService::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

bool ToolService::running() const { return server_->is_running(); }

HttpSandboxClient::HttpSandboxClient(std::string base_url,
                                     std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

ExecOutcome HttpSandboxClient::execute(const std::string& db_name,
                                       const std::string& sql) const {
  httplib::Client client(base_url_);
  client.set_read_timeout(timeout_);
  client.set_connection_timeout(std::chrono::seconds(5));
  nlohmann::json body = {{"db_name", db_name}, {"sql", sql}};
  auto res = client.Post("/tools/execute_sql_query", body.dump(),
                         "application/json");
  if (!res) {
    return ExecError{ExecError::Kind::kSqlError,
                     "tool service unreachable: " + httplib::to_string(res.error())};
  }
  auto payload = nlohmann::json::parse(res->body, nullptr, false);
  if (payload.is_discarded()) {
    return ExecError{ExecError::Kind::kSqlError,
                     "tool service returned a non-JSON body"};
  }
  return outcome_from_payload(payload);
}

}  // namespace tirsql
