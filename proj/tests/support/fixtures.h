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

#ifndef TIRSQL_TESTS_SUPPORT_FIXTURES_H_
#define TIRSQL_TESTS_SUPPORT_FIXTURES_H_

#include <filesystem>
#include <string>
#include <vector>

namespace tirsql::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Runs `sql` against a new SQLite file at `file`. Throws std::runtime_error.
void build_database(const std::filesystem::path& file, const std::string& sql);

// Populates `root` with:
//   toy.sqlite                                  t(a) holding 1..25
//   california_schools/california_schools.sqlite
//   toxicology/toxicology.sqlite
void build_fixture_databases(const std::filesystem::path& root);

// Ten BIRD-style records over the fixture databases: seven usable golds, two
// golds with empty results (ids 8 and 9) and one failing gold (id 10).
std::string fixture_dataset_json();

inline constexpr int kFixtureKept = 7;

// Gold queries of the three transcript cases.
extern const char* const kCase1Gold;
extern const char* const kCase2Gold;
extern const char* const kCase3Gold;

// Assistant turns replaying the three transcript cases on the fixtures.
std::vector<std::string> case1_script();
std::vector<std::string> case2_script();
std::vector<std::string> case3_script();

// A recursive query that never terminates on its own.
inline constexpr const char* kEndlessQuery =
    "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) "
    "SELECT count(*) FROM c";

// FNV-1a 64 digest of a file's bytes, as hex.
std::string file_digest(const std::filesystem::path& file);

}  // namespace tirsql::testing

#endif  // TIRSQL_TESTS_SUPPORT_FIXTURES_H_
