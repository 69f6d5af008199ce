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

#ifndef TIRSQL_REWARD_H_
#define TIRSQL_REWARD_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tirsql/sandbox.h"
#include "tirsql/trajectory.h"

namespace tirsql {

struct RewardConfig {
  double format_magnitude = 0.1;
  double exec_magnitude = 0.1;
  double result_magnitude = 1.0;

  // Throws std::invalid_argument on negative magnitudes.
  void validate() const;
};

// The gold query failed on its own database; a dataset problem rather than a
// model failure.
class GoldExecutionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// SQL from the last assistant turn's <answer>, if there is a usable one.
std::optional<std::string> final_answer_sql(const Trajectory& traj);

// +f when the whole trajectory passes validate_trajectory_format, else -f.
double format_reward(const Trajectory& traj, const RewardConfig& cfg);

// Scores the final answer SQL: +e if it runs, -e if it fails, 0 when the
// format check failed.
double execution_reward(const Trajectory& traj, const Sandbox& sandbox,
                        const RewardConfig& cfg);

// +1 on matching results, -1 on a mismatch, 0 when the format check failed or
// the answer does not run. Throws GoldExecutionFailed.
double result_reward(const Trajectory& traj, const std::string& gold_sql,
                     const Sandbox& sandbox, const RewardConfig& cfg);

// True when the statement has an ORDER BY at the top level, outside string
// literals, comments and parentheses.
bool order_sensitive(std::string_view sql);

// Row-multiset equality after numeric normalization. Column names are
// ignored; column counts must match.
bool results_equal(const QueryResult& pred, const QueryResult& gold,
                   bool order_sensitive);

// The gating shared by every scorer: a format failure zeroes the execution
// and result terms, an execution failure zeroes the result term.
RewardBreakdown compose_reward(bool format_ok, bool executes, bool matches,
                               const RewardConfig& cfg);

// All three components with gating, summed. Throws GoldExecutionFailed.
RewardBreakdown total_reward(const Trajectory& traj,
                             const std::string& gold_sql,
                             const Sandbox& sandbox, const RewardConfig& cfg);

}  // namespace tirsql

#endif  // TIRSQL_REWARD_H_
