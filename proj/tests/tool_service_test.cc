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

#include <chrono>
#include <fstream>
#include <iterator>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"
#include "support/fixtures.h"
#include "tirsql/tool_schema.h"

namespace tirsql {
namespace {

class ToolServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::build_fixture_databases(dir_.path());
    cfg_.db_root = dir_.path();
    cfg_.timeout = std::chrono::milliseconds(2000);
  }

  testing::TempDir dir_;
  SandboxConfig cfg_;
};

TEST(BindAddressTest, Parses) {
  BindAddress a = parse_bind_address("0.0.0.0:9000");
  EXPECT_EQ(a.host, "0.0.0.0");
  EXPECT_EQ(a.port, 9000);
  for (const char* bad : {"9000", ":9000", "host:", "host:abc", "host:70000",
                          "host:12x"}) {
    EXPECT_THROW(parse_bind_address(bad), std::invalid_argument) << bad;
  }
}

TEST(ListTools, ServesSchema) {
  HttpReply reply = handle_list_tools();
  EXPECT_EQ(reply.status, 200);
  auto parsed = nlohmann::json::parse(reply.body);
  EXPECT_EQ(parsed["name"], "sql-execute_sql_query");
  EXPECT_EQ(parsed["parameters"]["required"],
            (nlohmann::json{"db_name", "sql"}));
}

TEST_F(ToolServiceTest, HandlerStatusCodes) {
  Sandbox sandbox(cfg_);
  EXPECT_EQ(handle_execute_sql(sandbox, "{}").status, 400);
  EXPECT_EQ(handle_execute_sql(sandbox, "not json").status, 400);
  EXPECT_EQ(handle_execute_sql(sandbox, R"({"db_name": 1, "sql": "x"})").status,
            400);
  HttpReply bad_sql =
      handle_execute_sql(sandbox, R"({"db_name": "toy", "sql": "SELEC"})");
  EXPECT_EQ(bad_sql.status, 200);
  EXPECT_TRUE(nlohmann::json::parse(bad_sql.body).contains("error"));
  HttpReply ok = handle_execute_sql(
      sandbox, R"({"db_name": "toy", "sql": "SELECT COUNT(*) FROM t"})");
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.body, R"x({"columns": ["COUNT(*)"], "data": [{"COUNT(*)": 25}]})x");
}

TEST_F(ToolServiceTest, RemoteClientMatchesLocalSandbox) {
  ToolService service(cfg_);
  const int port = service.bind({"127.0.0.1", 0});
  ASSERT_GT(port, 0);
  std::thread server([&] { service.listen(); });
  while (!service.running()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  httplib::Client raw("127.0.0.1", port);
  auto tools = raw.Get("/tools");
  ASSERT_TRUE(tools);
  EXPECT_EQ(tools->status, 200);
  auto bad = raw.Post("/tools/execute_sql_query", "{}", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  Sandbox local(cfg_);
  HttpSandboxClient remote("http://127.0.0.1:" + std::to_string(port));
  for (const char* sql : {"SELECT a FROM t ORDER BY a", "SELECT 1.5, 'x', NULL",
                          "SELECT nope FROM t"}) {
    ExecOutcome a = local.execute("toy", sql);
    ExecOutcome b = remote.execute("toy", sql);
    ASSERT_EQ(a.index(), b.index()) << sql;
    EXPECT_EQ(render_tool_response(a), render_tool_response(b)) << sql;
  }
  service.stop();
  server.join();
  EXPECT_FALSE(service.running());
}

TEST(HttpSandboxClientTest, UnreachableIsAnError) {
  HttpSandboxClient client("http://127.0.0.1:1", std::chrono::milliseconds(500));
  ExecOutcome out = client.execute("toy", "SELECT 1");
  ASSERT_FALSE(succeeded(out));
  EXPECT_NE(std::get<ExecError>(out).message.find("unreachable"),
            std::string::npos);
}

TEST(ToolSchemaTest, MatchesShippedJson) {
  std::ifstream in(std::string(TIRSQL_DATA_DIR) + "/tool_schema.json");
  ASSERT_TRUE(in);
  EXPECT_EQ(nlohmann::ordered_json::parse(in), tool_schema());
}

TEST(ToolSchemaTest, BlockMatchesShippedText) {
  std::ifstream in(std::string(TIRSQL_DATA_DIR) + "/tools_block.txt");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  while (!text.empty() && text.back() == '\n') text.pop_back();
  EXPECT_EQ(text, tools_block());
}

}  // namespace
}  // namespace tirsql
