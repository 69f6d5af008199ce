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

#ifndef TIRSQL_TRAJECTORY_IO_H_
#define TIRSQL_TRAJECTORY_IO_H_

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirsql/trajectory.h"

namespace tirsql {

class TrajectoryFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One record with a fixed key order:
//   prompt_id, db_name, termination, termination_detail, turns_used,
//   rethink_count, messages, tool_records, token_log, reward
// token_log and reward are null when absent.
nlohmann::ordered_json trajectory_to_json(const Trajectory& traj);

// Throws TrajectoryFormatError.
Trajectory trajectory_from_json(const nlohmann::json& record);

nlohmann::ordered_json outcome_to_json(const ExecOutcome& outcome);
ExecOutcome outcome_from_json(const nlohmann::json& value);

// One compact JSON object per line.
void write_jsonl(std::ostream& out, const std::vector<Trajectory>& trajs);
void write_jsonl_line(std::ostream& out, const Trajectory& traj);

// Skips blank lines. Throws TrajectoryFormatError naming the bad line.
std::vector<Trajectory> read_jsonl(std::istream& in);

}  // namespace tirsql

#endif  // TIRSQL_TRAJECTORY_IO_H_
