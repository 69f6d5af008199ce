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

#include "tirsql/grpo.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tirsql/protocol.h"
#include "tirsql/rollout.h"

namespace tirsql {

std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     double epsilon_std) {
  if (rewards.empty()) {
    throw std::invalid_argument("group_advantages needs at least one reward");
  }
  std::vector<double> adv(rewards.size(), 0.0);
  // Identical rewards carry no signal; checked exactly so that rounding in
  // the mean cannot turn them into tiny nonzero advantages.
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards.front(); })) {
    return adv;
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / n);
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    adv[i] = (rewards[i] - mean) / (std_dev + epsilon_std);
  }
  return adv;
}

void FilterPolicy::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("tau must be in [0, 1]");
  }
  const double w[] = {weights.format_valid, weights.answered,
                      weights.no_void_turns, weights.executable_answer};
  double sum = 0.0;
  for (double x : w) {
    if (x < 0.0) throw std::invalid_argument("quality weights must be >= 0");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("quality weights must sum to 1");
  }
}

QualityCriteria quality_criteria(const Trajectory& traj) {
  QualityCriteria c;
  c.format_valid = all_turns_well_formed(traj.messages);
  c.answered = traj.termination == Termination::kAnswered;
  c.no_void_turns = traj.rethink_count == 0;
  c.executable_answer = traj.reward && traj.reward->answer_executes;
  return c;
}

double quality_score(const QualityCriteria& c, const QualityWeights& w) {
  return (c.format_valid ? w.format_valid : 0.0) +
         (c.answered ? w.answered : 0.0) +
         (c.no_void_turns ? w.no_void_turns : 0.0) +
         (c.executable_answer ? w.executable_answer : 0.0);
}

double quality_score(const Trajectory& traj, const QualityWeights& w) {
  return quality_score(quality_criteria(traj), w);
}

FilterOutcome apply_filter(RolloutGroup group, const FilterPolicy& fp,
                           double epsilon_std) {
  fp.validate();
  if (group.quality.size() != group.rewards.size()) {
    throw std::invalid_argument("quality and rewards differ in length");
  }
  const std::size_t n = group.rewards.size();
  group.kept.assign(n, false);
  group.advantages.assign(n, 0.0);
  std::vector<double> kept_rewards;
  for (std::size_t i = 0; i < n; ++i) {
    if (group.quality[i] > fp.tau) {
      group.kept[i] = true;
      kept_rewards.push_back(group.rewards[i]);
    }
  }
  FilterOutcome out;
  if (kept_rewards.empty()) {
    out.status = FilterStatus::kEmptyAfterFilter;
    out.group = std::move(group);
    return out;
  }
  if (fp.recompute_advantages) {
    std::vector<double> adv = group_advantages(kept_rewards, epsilon_std);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (group.kept[i]) group.advantages[i] = adv[k++];
    }
  } else {
    std::vector<double> adv = group_advantages(group.rewards, epsilon_std);
    for (std::size_t i = 0; i < n; ++i) {
      if (group.kept[i]) group.advantages[i] = adv[i];
    }
  }
  out.group = std::move(group);
  return out;
}

namespace {

void fill_scores(RolloutGroup& group) {
  group.rewards.clear();
  group.quality.clear();
  for (const Trajectory& t : group.trajectories) {
    if (!t.reward) {
      throw std::invalid_argument("trajectory " + t.prompt_id +
                                  " has not been scored");
    }
    group.rewards.push_back(t.reward->total);
    group.quality.push_back(quality_score(t));
  }
}

}  // namespace

FilterOutcome filter_trajectories(RolloutGroup group, const FilterPolicy& fp,
                                  double epsilon_std) {
  fill_scores(group);
  return apply_filter(std::move(group), fp, epsilon_std);
}

RolloutGroup score_group(RolloutGroup group, double epsilon_std) {
  fill_scores(group);
  group.kept.assign(group.rewards.size(), true);
  group.advantages = group.rewards.empty()
                         ? std::vector<double>{}
                         : group_advantages(group.rewards, epsilon_std);
  return group;
}

LossResult surrogate_loss(const LossInputs& inputs) {
  LossResult out;
  out.per_token_terms.resize(inputs.sequences.size());
  out.grad_new_logprobs.resize(inputs.sequences.size());
  for (const LossSequence& s : inputs.sequences) {
    if (s.new_logprobs.size() != s.old_logprobs.size() ||
        s.new_logprobs.size() != s.mask.size()) {
      throw std::invalid_argument("loss inputs are not aligned");
    }
    for (int m : s.mask) {
      if (m != 0 && m != 1) throw std::invalid_argument("mask must be 0 or 1");
      out.unmasked_tokens += static_cast<std::size_t>(m);
    }
  }
  if (out.unmasked_tokens == 0) {
    throw DegenerateBatch("every token in the batch is masked");
  }
  const double n = static_cast<double>(out.unmasked_tokens);
  double sum = 0.0;
  for (std::size_t i = 0; i < inputs.sequences.size(); ++i) {
    const LossSequence& s = inputs.sequences[i];
    auto& terms = out.per_token_terms[i];
    auto& grads = out.grad_new_logprobs[i];
    terms.assign(s.mask.size(), 0.0);
    grads.assign(s.mask.size(), 0.0);
    for (std::size_t t = 0; t < s.mask.size(); ++t) {
      if (s.mask[t] == 0) continue;
      const double ratio = std::exp(s.new_logprobs[t] - s.old_logprobs[t]);
      double term = ratio * s.advantage;
      double dterm = term;  // d term / d new_logprob
      if (inputs.clip_epsilon) {
        const double eps = *inputs.clip_epsilon;
        const double clipped =
            std::clamp(ratio, 1.0 - eps, 1.0 + eps) * s.advantage;
        if (clipped < term) {
          term = clipped;
          dterm = 0.0;
        }
      }
      terms[t] = term;
      grads[t] = -dterm / n;
      sum += term;
    }
  }
  out.loss = -sum / n;
  return out;
}

LossInputs loss_inputs_from_groups(const std::vector<RolloutGroup>& groups) {
  LossInputs inputs;
  for (const RolloutGroup& g : groups) {
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
      if (i >= g.kept.size() || !g.kept[i]) continue;
      const Trajectory& t = g.trajectories[i];
      if (!t.token_log) {
        throw MissingTokenData("trajectory " + t.prompt_id +
                               " has no token data");
      }
      LossSequence s;
      s.advantage = i < g.advantages.size() ? g.advantages[i] : 0.0;
      for (const TokenEntry& e : *t.token_log) {
        s.old_logprobs.push_back(e.logprob);
        s.new_logprobs.push_back(e.logprob);
        s.mask.push_back(e.loss_mask);
      }
      inputs.sequences.push_back(std::move(s));
    }
  }
  return inputs;
}

ToyPolicy::ToyPolicy(int num_states, int num_actions)
    : states_(num_states), actions_(num_actions) {
  if (num_states < 1 || num_actions < 1) {
    throw std::invalid_argument("toy policy needs states and actions");
  }
  logits_.assign(static_cast<std::size_t>(num_states) *
                     static_cast<std::size_t>(num_actions),
                 0.0);
}

std::vector<double> ToyPolicy::probs(int s) const {
  std::vector<double> p(static_cast<std::size_t>(actions_));
  double max_logit = logit(s, 0);
  for (int a = 1; a < actions_; ++a) max_logit = std::max(max_logit, logit(s, a));
  double z = 0.0;
  for (int a = 0; a < actions_; ++a) {
    p[static_cast<std::size_t>(a)] = std::exp(logit(s, a) - max_logit);
    z += p[static_cast<std::size_t>(a)];
  }
  for (double& x : p) x /= z;
  return p;
}

double ToyPolicy::log_prob(int s, int a) const {
  double max_logit = logit(s, 0);
  for (int b = 1; b < actions_; ++b) max_logit = std::max(max_logit, logit(s, b));
  double z = 0.0;
  for (int b = 0; b < actions_; ++b) z += std::exp(logit(s, b) - max_logit);
  return logit(s, a) - max_logit - std::log(z);
}

int ToyPolicy::sample(int s, std::mt19937_64& rng) const {
  std::vector<double> p = probs(s);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (int a = 0; a < actions_; ++a) {
    acc += p[static_cast<std::size_t>(a)];
    if (u < acc) return a;
  }
  return actions_ - 1;
}

int ToyPolicy::greedy(int s) const {
  int best = 0;
  for (int a = 1; a < actions_; ++a) {
    if (logit(s, a) > logit(s, best)) best = a;
  }
  return best;
}

LossInputs toy_loss_inputs(const ToyPolicy& policy, const ToyBatch& batch,
                           std::optional<double> clip_epsilon) {
  LossInputs inputs;
  inputs.clip_epsilon = clip_epsilon;
  inputs.sequences.reserve(batch.size());
  for (const ToySequence& seq : batch) {
    LossSequence s;
    s.advantage = seq.advantage;
    for (const ToyStep& step : seq.steps) {
      s.new_logprobs.push_back(policy.log_prob(step.state, step.action));
      s.old_logprobs.push_back(step.old_logprob);
      s.mask.push_back(step.mask);
    }
    inputs.sequences.push_back(std::move(s));
  }
  return inputs;
}

double toy_loss(const ToyPolicy& policy, const ToyBatch& batch,
                std::optional<double> clip_epsilon) {
  return surrogate_loss(toy_loss_inputs(policy, batch, clip_epsilon)).loss;
}

std::vector<double> toy_loss_gradient(const ToyPolicy& policy,
                                      const ToyBatch& batch,
                                      std::optional<double> clip_epsilon) {
  LossResult r = surrogate_loss(toy_loss_inputs(policy, batch, clip_epsilon));
  std::vector<double> grad(policy.logits().size(), 0.0);
  const int num_actions = policy.num_actions();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t t = 0; t < batch[i].steps.size(); ++t) {
      const double g = r.grad_new_logprobs[i][t];
      if (g == 0.0) continue;
      const ToyStep& step = batch[i].steps[t];
      // d log softmax(s, a) / d logit(s, b) = [a == b] - p(s, b)
      std::vector<double> p = policy.probs(step.state);
      const std::size_t row = static_cast<std::size_t>(step.state) *
                              static_cast<std::size_t>(num_actions);
      for (int b = 0; b < num_actions; ++b) {
        const double indicator = b == step.action ? 1.0 : 0.0;
        grad[row + static_cast<std::size_t>(b)] +=
            g * (indicator - p[static_cast<std::size_t>(b)]);
      }
    }
  }
  return grad;
}

double loss_gradient_check(const ToyPolicy& policy, const ToyBatch& batch,
                           double h) {
  const std::vector<double> analytic = toy_loss_gradient(policy, batch);
  ToyPolicy probe = policy;
  double max_err = 0.0;
  for (std::size_t k = 0; k < probe.logits().size(); ++k) {
    const double x = probe.logits()[k];
    probe.logits()[k] = x + h;
    const double up = toy_loss(probe, batch);
    probe.logits()[k] = x - h;
    const double down = toy_loss(probe, batch);
    probe.logits()[k] = x;
    max_err = std::max(max_err, std::fabs((up - down) / (2 * h) - analytic[k]));
  }
  return max_err;
}

}  // namespace tirsql
