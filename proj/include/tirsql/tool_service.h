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

#ifndef TIRSQL_TOOL_SERVICE_H_
#define TIRSQL_TOOL_SERVICE_H_

#include <memory>
#include <string>

#include "tirsql/sandbox.h"

namespace httplib {
class Server;
}

namespace tirsql {

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8811;
};

// Parses "host:port". Throws std::invalid_argument.
BindAddress parse_bind_address(const std::string& text);

struct HttpReply {
  int status = 200;
  std::string body;
};

// Request handlers, independent of the transport.
HttpReply handle_list_tools();
HttpReply handle_execute_sql(const Sandbox& sandbox, const std::string& body);

// HTTP front end for a Sandbox:
//   GET  /tools                     -> tool schema
//   POST /tools/execute_sql_query   -> {"columns","data"} or {"error"}
// Tool failures are reported in the payload with status 200; only bodies that
// are not a JSON object with string db_name and sql get a 400.
class ToolService {
 public:
  explicit ToolService(SandboxConfig cfg);
  ~ToolService();

  ToolService(const ToolService&) = delete;
  ToolService& operator=(const ToolService&) = delete;

  // Binds the socket; port 0 picks a free port. Returns the bound port, or -1.
  int bind(const BindAddress& address);
  // Serves until stop(). Call after bind().
  bool listen();
  void stop();
  bool running() const;

 private:
  Sandbox sandbox_;
  std::unique_ptr<httplib::Server> server_;
};

// SandboxClient that talks to a remote ToolService.
class HttpSandboxClient : public SandboxClient {
 public:
  explicit HttpSandboxClient(std::string base_url,
                             std::chrono::milliseconds timeout =
                                 std::chrono::milliseconds(60000));

  ExecOutcome execute(const std::string& db_name,
                      const std::string& sql) const override;

 private:
  std::string base_url_;
  std::chrono::milliseconds timeout_;
};

}  // namespace tirsql

#endif  // TIRSQL_TOOL_SERVICE_H_
