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

#ifndef TIRSQL_GRPO_H_
#define TIRSQL_GRPO_H_

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "tirsql/trajectory.h"

namespace tirsql {

// (r - mean) / (population std + epsilon_std); all zeros when the rewards
// are identical. Throws std::invalid_argument on an empty input.
std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     double epsilon_std = 1e-6);

struct QualityCriteria {
  bool format_valid = false;
  bool answered = false;
  bool no_void_turns = false;
  bool executable_answer = false;
};

struct QualityWeights {
  double format_valid = 0.25;
  double answered = 0.25;
  double no_void_turns = 0.25;
  double executable_answer = 0.25;
};

struct FilterPolicy {
  double tau = 0.5;
  QualityWeights weights;
  // When false, kept members keep the advantages computed over the whole
  // group instead of being renormalized among themselves.
  bool recompute_advantages = true;

  // Throws std::invalid_argument unless tau is in [0, 1] and the weights are
  // non-negative and sum to 1.
  void validate() const;
};

// format_valid: every assistant turn is well formed. answered: terminated
// with an answer. no_void_turns: no rethink was injected. executable_answer:
// the scored answer SQL ran.
QualityCriteria quality_criteria(const Trajectory& traj);
double quality_score(const QualityCriteria& c, const QualityWeights& w = {});
double quality_score(const Trajectory& traj, const QualityWeights& w = {});

enum class FilterStatus { kOk, kEmptyAfterFilter };

struct FilterOutcome {
  RolloutGroup group;
  FilterStatus status = FilterStatus::kOk;
};

// Marks kept[i] = quality[i] > tau and computes advantages over the kept
// members (or the whole group, see FilterPolicy); dropped members get 0. Uses group.quality and
// group.rewards as given.
FilterOutcome apply_filter(RolloutGroup group, const FilterPolicy& fp,
                           double epsilon_std = 1e-6);

// Fills rewards and quality from the scored trajectories, then filters.
// Throws std::invalid_argument if a trajectory has no reward.
FilterOutcome filter_trajectories(RolloutGroup group, const FilterPolicy& fp,
                                  double epsilon_std = 1e-6);

// Same as filter_trajectories but keeps everyone (GRPO without filtering).
RolloutGroup score_group(RolloutGroup group, double epsilon_std = 1e-6);

struct LossSequence {
  std::vector<double> new_logprobs;
  std::vector<double> old_logprobs;
  std::vector<int> mask;
  double advantage = 0.0;
};

struct LossInputs {
  std::vector<LossSequence> sequences;
  double epsilon_std = 1e-6;
  std::optional<double> clip_epsilon;
};

struct LossResult {
  double loss = 0.0;
  std::size_t unmasked_tokens = 0;
  // ratio * advantage (or its clipped form) per token, 0 on masked tokens.
  std::vector<std::vector<double>> per_token_terms;
  // d loss / d new_logprob per token.
  std::vector<std::vector<double>> grad_new_logprobs;
};

class DegenerateBatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// -mean over unmasked tokens of exp(new - old) * A, with no KL term. Throws
// DegenerateBatch when every token is masked and std::invalid_argument on
// misaligned inputs.
LossResult surrogate_loss(const LossInputs& inputs);

// Loss inputs for the kept trajectories of filtered groups. new_logprobs
// start equal to the recorded ones. Throws MissingTokenData.
LossInputs loss_inputs_from_groups(const std::vector<RolloutGroup>& groups);

// Softmax policy over a logit table.
class ToyPolicy {
 public:
  ToyPolicy(int num_states, int num_actions);

  int num_states() const { return states_; }
  int num_actions() const { return actions_; }

  double& logit(int s, int a) { return logits_[index(s, a)]; }
  double logit(int s, int a) const { return logits_[index(s, a)]; }
  std::vector<double>& logits() { return logits_; }
  const std::vector<double>& logits() const { return logits_; }

  std::vector<double> probs(int s) const;
  double log_prob(int s, int a) const;
  int sample(int s, std::mt19937_64& rng) const;
  int greedy(int s) const;

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(actions_) +
           static_cast<std::size_t>(a);
  }

  int states_;
  int actions_;
  std::vector<double> logits_;
};

struct ToyStep {
  int state = 0;
  int action = 0;
  double old_logprob = 0.0;
  int mask = 1;
};

struct ToySequence {
  std::vector<ToyStep> steps;
  double advantage = 0.0;
};

using ToyBatch = std::vector<ToySequence>;

LossInputs toy_loss_inputs(const ToyPolicy& policy, const ToyBatch& batch,
                           std::optional<double> clip_epsilon = std::nullopt);

// Surrogate loss of the batch under the policy's current logits.
double toy_loss(const ToyPolicy& policy, const ToyBatch& batch,
                std::optional<double> clip_epsilon = std::nullopt);

// Analytic d loss / d logits, laid out like ToyPolicy::logits().
std::vector<double> toy_loss_gradient(
    const ToyPolicy& policy, const ToyBatch& batch,
    std::optional<double> clip_epsilon = std::nullopt);

// Max |analytic - central difference| over all logits.
double loss_gradient_check(const ToyPolicy& policy, const ToyBatch& batch,
                           double h = 1e-5);

}  // namespace tirsql

#endif  // TIRSQL_GRPO_H_
