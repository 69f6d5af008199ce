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

#include "tirsql/toy_env.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace tirsql {

void ToyEnvConfig::validate() const {
  if (candidates < 1) throw std::invalid_argument("candidates must be >= 1");
  if (!(reveal_prob >= 0.0 && reveal_prob <= 1.0)) {
    throw std::invalid_argument("reveal_prob must be in [0, 1]");
  }
  if (max_turns < 1) throw std::invalid_argument("max_turns must be >= 1");
  if (!(noise >= 0.0 && noise <= 1.0)) {
    throw std::invalid_argument("noise must be in [0, 1]");
  }
  reward.validate();
}

ToyEnv::ToyEnv(ToyEnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

ToyEpisode ToyEnv::run(const ToyPolicy& policy, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, cfg_.candidates - 1);
  const int correct = pick(rng);

  ToyEpisode ep;
  ep.forced = cfg_.noise > 0.0 && unit(rng) < cfg_.noise;
  int state = 0;
  int void_turns = 0;
  int rethinks = 0;
  bool answered = false;
  bool matches = false;
  for (int t = 0; t < cfg_.max_turns; ++t) {
    const int action =
        ep.forced && t == 0 ? void_action() : policy.sample(state, rng);
    ep.steps.push_back({state, action, policy.log_prob(state, action), 1});
    if (action == probe_action()) {
      state = unit(rng) < cfg_.reveal_prob ? 1 + correct : uninformative_state();
    } else if (action == void_action()) {
      ++void_turns;
      if (t + 1 < cfg_.max_turns) ++rethinks;
    } else {
      answered = true;
      matches = action - 1 == correct;
      break;
    }
  }
  // Void turns are malformed, so they fail the trajectory format check just
  // like a missing answer does. Every candidate answer is executable SQL.
  const bool format_ok = answered && void_turns == 0;
  ep.reward = compose_reward(format_ok, answered, matches, cfg_.reward);
  ep.criteria.format_valid = void_turns == 0;
  ep.criteria.answered = answered;
  ep.criteria.no_void_turns = rethinks == 0;
  ep.criteria.executable_answer = ep.reward.answer_executes;
  return ep;
}

double ToyEnv::expected_reward(const std::vector<int>& action_per_state) const {
  if (static_cast<int>(action_per_state.size()) != num_states()) {
    throw std::invalid_argument("need one action per state");
  }
  const double fail = -cfg_.reward.format_magnitude;
  // value(state, turn, correct) for a clean episode.
  std::function<double(int, int, int)> value = [&](int state, int turn,
                                                   int correct) -> double {
    if (turn == cfg_.max_turns) return fail;
    const int a = action_per_state[static_cast<std::size_t>(state)];
    if (a == probe_action()) {
      return cfg_.reveal_prob * value(1 + correct, turn + 1, correct) +
             (1.0 - cfg_.reveal_prob) *
                 value(uninformative_state(), turn + 1, correct);
    }
    if (a == void_action()) return fail;
    return compose_reward(true, true, a - 1 == correct, cfg_.reward).total;
  };
  double clean = 0.0;
  for (int c = 0; c < cfg_.candidates; ++c) clean += value(0, 0, c);
  clean /= cfg_.candidates;
  return (1.0 - cfg_.noise) * clean + cfg_.noise * fail;
}

double ToyEnv::max_expected_reward() const {
  const int n = num_states();
  const int m = num_actions();
  std::vector<int> policy(static_cast<std::size_t>(n), 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    best = std::max(best, expected_reward(policy));
    int k = 0;
    while (k < n && ++policy[static_cast<std::size_t>(k)] == m) {
      policy[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == n) break;
  }
  return best;
}

void ToyTrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (lr < 0.0) throw std::invalid_argument("lr must be >= 0");
  if (group_size < 1) throw std::invalid_argument("group_size must be >= 1");
  if (groups_per_step < 1) {
    throw std::invalid_argument("groups_per_step must be >= 1");
  }
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (clip_epsilon && *clip_epsilon <= 0.0) {
    throw std::invalid_argument("clip_epsilon must be > 0");
  }
  filter_policy.validate();
}

ToyRun train_toy(const ToyEnv& env, const ToyTrainConfig& cfg) {
  cfg.validate();
  ToyRun run{{}, ToyPolicy(env.num_states(), env.num_actions())};
  std::mt19937_64 rng(cfg.seed);
  for (int step = 0; step < cfg.steps; ++step) {
    ToyBatch batch;
    double reward_sum = 0.0;
    int kept = 0;
    const int total = cfg.groups_per_step * cfg.group_size;
    for (int g = 0; g < cfg.groups_per_step; ++g) {
      std::vector<ToyEpisode> episodes;
      RolloutGroup group;
      for (int i = 0; i < cfg.group_size; ++i) {
        episodes.push_back(env.run(run.policy, rng));
        group.rewards.push_back(episodes.back().reward.total);
        group.quality.push_back(quality_score(
            episodes.back().criteria, cfg.filter_policy.weights));
        reward_sum += episodes.back().reward.total;
      }
      if (cfg.filter) {
        FilterOutcome f = apply_filter(std::move(group), cfg.filter_policy,
                                       cfg.epsilon_std);
        if (f.status == FilterStatus::kEmptyAfterFilter) continue;
        group = std::move(f.group);
      } else {
        group.kept.assign(group.rewards.size(), true);
        group.advantages = group_advantages(group.rewards, cfg.epsilon_std);
      }
      for (int i = 0; i < cfg.group_size; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        if (!group.kept[u]) continue;
        ++kept;
        batch.push_back({std::move(episodes[u].steps), group.advantages[u]});
      }
    }
    ToyCurvePoint point;
    point.step = step;
    point.mean_reward = reward_sum / total;
    point.kept_fraction = static_cast<double>(kept) / total;
    if (!batch.empty()) {
      point.loss = toy_loss(run.policy, batch, cfg.clip_epsilon);
      for (int e = 0; e < cfg.epochs && cfg.lr > 0.0; ++e) {
        std::vector<double> grad =
            toy_loss_gradient(run.policy, batch, cfg.clip_epsilon);
        std::vector<double>& logits = run.policy.logits();
        for (std::size_t k = 0; k < logits.size(); ++k) {
          logits[k] -= cfg.lr * grad[k];
        }
      }
    }
    run.curve.push_back(point);
  }
  return run;
}

std::string curve_csv(const std::vector<ToyCurvePoint>& curve) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "step,mean_reward,kept_fraction,loss\n";
  for (const ToyCurvePoint& p : curve) {
    out << p.step << ',' << p.mean_reward << ',' << p.kept_fraction << ','
        << p.loss << '\n';
  }
  return out.str();
}

double final_mean_reward(const std::vector<ToyCurvePoint>& curve,
                         double fraction) {
  if (curve.empty()) return 0.0;
  const std::size_t width = std::max<std::size_t>(
      1, static_cast<std::size_t>(curve.size() * fraction));
  double sum = 0.0;
  for (std::size_t i = curve.size() - width; i < curve.size(); ++i) {
    sum += curve[i].mean_reward;
  }
  return sum / static_cast<double>(width);
}

bool has_declining_tail(const std::vector<ToyCurvePoint>& curve, double drop,
                        double fraction) {
  if (curve.size() < 2) return false;
  const std::size_t width = std::max<std::size_t>(
      1, static_cast<std::size_t>(curve.size() * fraction));
  double window = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    window += curve[i].mean_reward;
    if (i >= width) window -= curve[i - width].mean_reward;
    if (i + 1 >= width) best = std::max(best, window / width);
  }
  return best - final_mean_reward(curve, fraction) >= drop;
}

}  // namespace tirsql
