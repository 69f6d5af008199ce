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

#ifndef TIRSQL_TOY_ENV_H_
#define TIRSQL_TOY_ENV_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tirsql/grpo.h"
#include "tirsql/reward.h"

namespace tirsql {

// A miniature text-to-SQL task. The answer is one of `candidates` values.
// Each turn the policy may probe the database (a tool call that reveals the
// right candidate with probability reveal_prob), answer with one candidate,
// or emit a void turn. Episodes are scored with the reward-engine gating:
// any void turn fails the format check, a wrong answer executes but
// mismatches.
//
// States: 0 = nothing known, 1..C = candidate j revealed, C+1 = probe came
// back uninformative. Actions: 0 = probe, 1..C = answer j, C+1 = void.
struct ToyEnvConfig {
  int candidates = 2;
  double reveal_prob = 0.5;
  int max_turns = 3;
  // Fraction of episodes whose first turn is forced to be void, standing in
  // for corrupted generations. The forced turn is logged as a policy token.
  double noise = 0.0;
  RewardConfig reward;

  // Throws std::invalid_argument.
  void validate() const;
};

struct ToyEpisode {
  std::vector<ToyStep> steps;
  RewardBreakdown reward;
  QualityCriteria criteria;
  bool forced = false;
};

class ToyEnv {
 public:
  explicit ToyEnv(ToyEnvConfig cfg);

  const ToyEnvConfig& config() const { return cfg_; }
  int num_states() const { return cfg_.candidates + 2; }
  int num_actions() const { return cfg_.candidates + 2; }
  int probe_action() const { return 0; }
  int void_action() const { return cfg_.candidates + 1; }
  int uninformative_state() const { return cfg_.candidates + 1; }

  ToyEpisode run(const ToyPolicy& policy, std::mt19937_64& rng) const;

  // Expected reward of a deterministic policy (one action per state),
  // computed exactly.
  double expected_reward(const std::vector<int>& action_per_state) const;

  // Best expected reward over all deterministic policies, by enumeration.
  double max_expected_reward() const;

 private:
  ToyEnvConfig cfg_;
};

struct ToyTrainConfig {
  int steps = 500;
  double lr = 1.0;
  int group_size = 5;
  int groups_per_step = 16;
  // Gradient steps on each collected batch; the importance ratio moves away
  // from 1 after the first.
  int epochs = 4;
  bool filter = false;
  FilterPolicy filter_policy;
  double epsilon_std = 1e-6;
  std::optional<double> clip_epsilon;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument.
  void validate() const;
};

struct ToyCurvePoint {
  int step = 0;
  double mean_reward = 0.0;
  double kept_fraction = 0.0;
  double loss = 0.0;
};

struct ToyRun {
  std::vector<ToyCurvePoint> curve;
  ToyPolicy policy;
};

ToyRun train_toy(const ToyEnv& env, const ToyTrainConfig& cfg);

// step,mean_reward,kept_fraction,loss with a header line.
std::string curve_csv(const std::vector<ToyCurvePoint>& curve);

// Mean reward over the last `fraction` of the curve (at least one point).
double final_mean_reward(const std::vector<ToyCurvePoint>& curve,
                         double fraction = 0.1);

// True when the curve's best moving-average window (width = fraction of the
// run) beats its final window by at least `drop`.
bool has_declining_tail(const std::vector<ToyCurvePoint>& curve,
                        double drop = 0.1, double fraction = 0.1);

}  // namespace tirsql

#endif  // TIRSQL_TOY_ENV_H_
