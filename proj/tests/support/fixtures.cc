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

#include "support/fixtures.h"

#include <sqlite3.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "tirsql/mock_policy.h"

namespace tirsql::testing {
namespace {

constexpr const char* kToySql = R"SQL(
CREATE TABLE t (a INTEGER);
WITH RECURSIVE n(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM n WHERE x < 25)
INSERT INTO t SELECT x FROM n;
)SQL";

// satscores.cds is declared without a type and frpm.CDSCode as TEXT, so a
// direct join between the two finds no rows until one side is cast.
constexpr const char* kSchoolsSql = R"SQL(
CREATE TABLE schools (CDSCode INTEGER PRIMARY KEY, School TEXT, Virtual TEXT);
CREATE TABLE satscores (
  cds PRIMARY KEY REFERENCES schools (CDSCode),
  sname TEXT,
  NumTstTakr INTEGER,
  AvgScrMath INTEGER
);
CREATE TABLE frpm (
  CDSCode TEXT PRIMARY KEY,
  "School Name" TEXT,
  "FRPM Count (K-12)" REAL
);
INSERT INTO schools VALUES
  (1001, 'Alder High', 'F'), (1002, 'Birch Academy', 'F'),
  (1003, 'Cedar Online', 'F'), (1004, 'Dogwood Prep', 'F'),
  (1005, 'Elm Charter', 'F'), (1006, 'Fir Valley', 'N'),
  (1007, 'Grove Middle', 'P'), (1008, 'Hazel Tech', 'N');
INSERT INTO satscores VALUES
  (1001, 'Alder High', 120, 455), (1002, 'Birch Academy', 88, 512),
  (1003, 'Cedar Online', 40, 401), (1004, 'Dogwood Prep', 217547, 430),
  (1005, 'Elm Charter', 75, 380), (1006, 'Fir Valley', 150, 520),
  (1007, 'Grove Middle', 60, 390), (1008, 'Hazel Tech', 95, NULL);
INSERT INTO frpm VALUES
  ('1001', 'Alder High', 310.0), ('1002', 'Birch Academy', 95.5),
  ('1004', 'Dogwood Prep', 1250.0), ('1006', 'Fir Valley', 640.0),
  ('1007', 'Grove Middle', 12.0);
)SQL";

constexpr const char* kToxicologySql = R"SQL(
CREATE TABLE molecule (molecule_id TEXT PRIMARY KEY, label TEXT);
CREATE TABLE atom (
  atom_id TEXT PRIMARY KEY,
  molecule_id TEXT REFERENCES molecule (molecule_id),
  element TEXT
);
INSERT INTO molecule VALUES
  ('TR001', '+'), ('TR002', '-'), ('TR003', '-'), ('TR004', '+'),
  ('TR005', '-');
INSERT INTO atom VALUES
  ('TR001_1', 'TR001', 'cl'), ('TR001_2', 'TR001', 'c'),
  ('TR002_1', 'TR002', 'ca'), ('TR002_2', 'TR002', 'o'),
  ('TR003_1', 'TR003', 'ca'), ('TR003_2', 'TR003', 'c'),
  ('TR004_1', 'TR004', 'c'), ('TR005_1', 'TR005', 'na');
)SQL";

constexpr const char* kCase3FirstTry =
    "SELECT SUM(s.NumTstTakr) FROM satscores s JOIN frpm f ON s.cds = "
    "f.CDSCode WHERE f.\"FRPM Count (K-12)\" = (SELECT MAX(\"FRPM Count "
    "(K-12)\") FROM frpm);";

std::string case2_query(const std::string& element) {
  return "SELECT MAX(m.label) AS max_label FROM molecule m JOIN atom a ON "
         "m.molecule_id = a.molecule_id WHERE a.element = '" +
         element + "';";
}

}  // namespace

const char* const kCase1Gold =
    "SELECT COUNT(*) FROM satscores JOIN schools ON satscores.cds = "
    "schools.CDSCode WHERE schools.Virtual = 'F' AND satscores.AvgScrMath > "
    "400;";
const char* const kCase2Gold =
    "SELECT MAX(m.label) AS max_label FROM molecule m JOIN atom a ON "
    "m.molecule_id = a.molecule_id WHERE a.element = 'ca';";
const char* const kCase3Gold =
    "SELECT SUM(s.NumTstTakr) FROM satscores s JOIN (SELECT CDSCode FROM frpm "
    "WHERE \"FRPM Count (K-12)\" = (SELECT MAX(\"FRPM Count (K-12)\") FROM "
    "frpm)) AS top_frpm ON CAST(s.cds AS TEXT) = top_frpm.CDSCode;";

TempDir::TempDir() {
  std::string pattern =
      (std::filesystem::temp_directory_path() / "tirsql-XXXXXX").string();
  if (mkdtemp(pattern.data()) == nullptr) {
    throw std::runtime_error("mkdtemp failed");
  }
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void build_database(const std::filesystem::path& file, const std::string& sql) {
  std::filesystem::create_directories(file.parent_path());
  sqlite3* db = nullptr;
  if (sqlite3_open(file.c_str(), &db) != SQLITE_OK) {
    sqlite3_close(db);
    throw std::runtime_error("cannot create " + file.string());
  }
  char* err = nullptr;
  if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string message = err ? err : "unknown error";
    sqlite3_free(err);
    sqlite3_close(db);
    throw std::runtime_error("fixture SQL failed: " + message);
  }
  sqlite3_close(db);
}

void build_fixture_databases(const std::filesystem::path& root) {
  build_database(root / "toy.sqlite", kToySql);
  build_database(root / "california_schools" / "california_schools.sqlite",
                 kSchoolsSql);
  build_database(root / "toxicology" / "toxicology.sqlite", kToxicologySql);
}

std::string fixture_dataset_json() {
  return R"JSON([
  {"question_id": 1, "db_id": "california_schools",
   "question": "How many schools with an average score in Math greater than 400 in the SAT test are exclusively virtual?",
   "evidence": "Exclusively virtual refers to Virtual = 'F'.",
   "SQL": "SELECT COUNT(*) FROM satscores JOIN schools ON satscores.cds = schools.CDSCode WHERE schools.Virtual = 'F' AND satscores.AvgScrMath > 400;",
   "difficulty": "simple"},
  {"question_id": 2, "db_id": "toxicology",
   "question": "Among the molecules with element Calcium, are they mostly carcinogenic or non carcinogenic?",
   "evidence": "calcium refers to element = 'ca'; label = '+' mean molecules are carcinogenic; label = '-' means molecules are non-carcinogenic; MAX(label).",
   "SQL": "SELECT MAX(m.label) AS max_label FROM molecule m JOIN atom a ON m.molecule_id = a.molecule_id WHERE a.element = 'ca';",
   "difficulty": "moderate"},
  {"question_id": 3, "db_id": "california_schools",
   "question": "What is the number of SAT test takers of the schools with the highest FRPM count for K-12 students?",
   "evidence": "",
   "SQL": "SELECT SUM(s.NumTstTakr) FROM satscores s JOIN (SELECT CDSCode FROM frpm WHERE \"FRPM Count (K-12)\" = (SELECT MAX(\"FRPM Count (K-12)\") FROM frpm)) AS top_frpm ON CAST(s.cds AS TEXT) = top_frpm.CDSCode;",
   "difficulty": "challenging"},
  {"question_id": 4, "db_id": "toy",
   "question": "How many values in t are at most 4?", "evidence": "",
   "SQL": "SELECT COUNT(*) FROM t WHERE a <= 4"},
  {"question_id": 5, "db_id": "toy",
   "question": "What are the three largest values in t, largest first?",
   "evidence": "", "SQL": "SELECT a FROM t ORDER BY a DESC LIMIT 3"},
  {"question_id": 6, "db_id": "toxicology",
   "question": "How many molecules are carcinogenic?",
   "evidence": "label = '+' means carcinogenic",
   "SQL": "SELECT COUNT(*) FROM molecule WHERE label = '+'"},
  {"question_id": 7, "db_id": "california_schools",
   "question": "List the names of the exclusively virtual schools.",
   "evidence": "Exclusively virtual refers to Virtual = 'F'.",
   "SQL": "SELECT School FROM schools WHERE Virtual = 'F' ORDER BY School"},
  {"question_id": 8, "db_id": "toy",
   "question": "Which values in t exceed 100?", "evidence": "",
   "SQL": "SELECT a FROM t WHERE a > 100"},
  {"question_id": 9, "db_id": "toxicology",
   "question": "Which atoms are xenon-xenon?", "evidence": "",
   "SQL": "SELECT atom_id FROM atom WHERE element = 'xx'"},
  {"question_id": 10, "db_id": "toxicology",
   "question": "What is the toxicity of each molecule?", "evidence": "",
   "SQL": "SELECT toxicity FROM molecule"}
]
)JSON";
}

std::vector<std::string> case1_script() {
  return {
      tool_call_turn("Count virtual schools whose SAT math average is above "
                     "400 by joining satscores to schools.",
                     "california_schools", kCase1Gold),
      answer_turn("The count came back as 4, which answers the question.",
                  kCase1Gold),
  };
}

std::vector<std::string> case2_script() {
  return {
      tool_call_turn("Take the largest label among molecules that contain "
                     "a calcium atom.",
                     "toxicology", case2_query("Ca")),
      tool_call_turn("The label came back null. Try the element in upper "
                     "case.",
                     "toxicology", case2_query("CA")),
      tool_call_turn("Still null. The evidence spells the element in lower "
                     "case.",
                     "toxicology", case2_query("ca")),
      answer_turn("The largest label is '-', so these molecules are mostly "
                  "non-carcinogenic.",
                  kCase2Gold),
  };
}

std::vector<std::string> case3_script() {
  std::vector<std::string> turns;
  const char* thoughts[] = {
      "Sum SAT test takers for the school with the largest K-12 FRPM count.",
      "The sum is null. Check the query again.",
      "Still null. Maybe the column name is wrong.",
      "Look at the maximum FRPM count once more.",
  };
  for (const char* thought : thoughts) {
    turns.push_back(
        tool_call_turn(thought, "california_schools", kCase3FirstTry));
  }
  turns.push_back(tool_call_turn(
      "Select the top school in a subquery and match codes as text.",
      "california_schools", kCase3Gold));
  turns.push_back(
      answer_turn("The query returns 217547, a plausible total.", kCase3Gold));
  return turns;
}

std::string file_digest(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::uint64_t h = 1469598103934665603ull;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tirsql::testing
