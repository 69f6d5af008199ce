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

#include "tirsql/config.h"

#include <fstream>

namespace tirsql {
namespace {

using ojson = nlohmann::ordered_json;

bool same_kind(const nlohmann::json& base, const nlohmann::json& value) {
  if (base.is_number()) return value.is_number();
  if (base.is_null()) return value.is_null() || value.is_number();
  return base.type() == value.type();
}

void merge(ojson& base, const nlohmann::json& patch, const std::string& path) {
  if (!patch.is_object()) {
    throw ConfigError("config " + (path.empty() ? "root" : path) +
                      " must be an object");
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    auto slot = base.find(it.key());
    if (slot == base.end()) throw ConfigError("unknown config key: " + key);
    if (slot->is_object()) {
      merge(*slot, it.value(), key);
    } else if (!same_kind(*slot, it.value()) &&
               !(slot->is_number() && it.value().is_null() &&
                 key == "toy.clip_epsilon")) {
      throw ConfigError("wrong type for config key: " + key);
    } else {
      *slot = it.value();
    }
  }
}

template <typename T>
T get(const ojson& j, const char* key, const std::string& section) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for config key: " + section + "." + key);
  }
}

RunConfig config_from_json(const ojson& j) {
  RunConfig c;
  const ojson& sb = j.at("sandbox");
  c.sandbox.db_root = get<std::string>(sb, "db_root", "sandbox");
  c.sandbox.timeout = std::chrono::milliseconds(get<long>(sb, "timeout_ms", "sandbox"));
  c.sandbox.row_limit = get<std::size_t>(sb, "row_limit", "sandbox");

  const ojson& ro = j.at("rollout");
  c.rollout.max_turns = get<int>(ro, "max_turns", "rollout");
  c.rollout.group_size = get<int>(ro, "group_size", "rollout");
  c.rollout.temperature = get<double>(ro, "temperature", "rollout");
  c.rollout.max_sequence_tokens = get<int>(ro, "max_sequence_tokens", "rollout");
  c.rollout.rethink_text = get<std::string>(ro, "rethink_text", "rollout");
  c.rollout.max_retries = get<int>(ro, "max_retries", "rollout");
  c.rollout.retry_backoff =
      std::chrono::milliseconds(get<long>(ro, "retry_backoff_ms", "rollout"));

  const ojson& rw = j.at("reward");
  c.reward.format_magnitude = get<double>(rw, "format_magnitude", "reward");
  c.reward.exec_magnitude = get<double>(rw, "exec_magnitude", "reward");
  c.reward.result_magnitude = get<double>(rw, "result_magnitude", "reward");

  const ojson& fp = j.at("filter");
  c.filter.tau = get<double>(fp, "tau", "filter");
  const ojson& w = fp.at("weights");
  c.filter.weights.format_valid = get<double>(w, "format_valid", "filter.weights");
  c.filter.weights.answered = get<double>(w, "answered", "filter.weights");
  c.filter.weights.no_void_turns = get<double>(w, "no_void_turns", "filter.weights");
  c.filter.weights.executable_answer =
      get<double>(w, "executable_answer", "filter.weights");
  c.filter.recompute_advantages = get<bool>(fp, "recompute_advantages", "filter");

  const ojson& po = j.at("policy");
  c.policy.url = get<std::string>(po, "url", "policy");
  c.policy.model = get<std::string>(po, "model", "policy");
  c.policy.api_key_env = get<std::string>(po, "api_key_env", "policy");
  c.policy.timeout_ms = get<int>(po, "timeout_ms", "policy");

  const ojson& te = j.at("toy_env");
  c.toy_env.candidates = get<int>(te, "candidates", "toy_env");
  c.toy_env.reveal_prob = get<double>(te, "reveal_prob", "toy_env");
  c.toy_env.max_turns = get<int>(te, "max_turns", "toy_env");
  c.toy_env.noise = get<double>(te, "noise", "toy_env");
  c.toy_env.reward = c.reward;

  const ojson& ty = j.at("toy");
  c.toy.steps = get<int>(ty, "steps", "toy");
  c.toy.lr = get<double>(ty, "lr", "toy");
  c.toy.group_size = get<int>(ty, "group_size", "toy");
  c.toy.groups_per_step = get<int>(ty, "groups_per_step", "toy");
  c.toy.epochs = get<int>(ty, "epochs", "toy");
  c.toy.filter = get<bool>(ty, "filter", "toy");
  if (ty.at("clip_epsilon").is_null()) {
    c.toy.clip_epsilon.reset();
  } else {
    c.toy.clip_epsilon = get<double>(ty, "clip_epsilon", "toy");
  }
  c.toy.filter_policy = c.filter;

  c.dataset = get<std::string>(j, "dataset", "");
  c.out_dir = get<std::string>(j, "out_dir", "");
  c.parallelism = get<std::size_t>(j, "parallelism", "");
  c.seed = get<std::uint64_t>(j, "seed", "");
  c.rollout.parallelism = c.parallelism;
  c.rollout.seed = c.seed;
  c.toy.seed = c.seed;
  return c;
}

}  // namespace

RunConfig::RunConfig() {
  toy.lr = 1e-6;
  toy.groups_per_step = 64;
}

void RunConfig::validate() const {
  try {
    sandbox.validate();
    rollout.validate();
    reward.validate();
    filter.validate();
    toy_env.validate();
    toy.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (policy.timeout_ms <= 0) throw ConfigError("policy timeout must be > 0");
}

ojson config_to_json(const RunConfig& c) {
  return ojson{
      {"sandbox",
       {{"db_root", c.sandbox.db_root.string()},
        {"timeout_ms", c.sandbox.timeout.count()},
        {"row_limit", c.sandbox.row_limit}}},
      {"rollout",
       {{"max_turns", c.rollout.max_turns},
        {"group_size", c.rollout.group_size},
        {"temperature", c.rollout.temperature},
        {"max_sequence_tokens", c.rollout.max_sequence_tokens},
        {"rethink_text", c.rollout.rethink_text},
        {"max_retries", c.rollout.max_retries},
        {"retry_backoff_ms", c.rollout.retry_backoff.count()}}},
      {"reward",
       {{"format_magnitude", c.reward.format_magnitude},
        {"exec_magnitude", c.reward.exec_magnitude},
        {"result_magnitude", c.reward.result_magnitude}}},
      {"filter",
       {{"tau", c.filter.tau},
        {"weights",
         {{"format_valid", c.filter.weights.format_valid},
          {"answered", c.filter.weights.answered},
          {"no_void_turns", c.filter.weights.no_void_turns},
          {"executable_answer", c.filter.weights.executable_answer}}},
        {"recompute_advantages", c.filter.recompute_advantages}}},
      {"policy",
       {{"url", c.policy.url},
        {"model", c.policy.model},
        {"api_key_env", c.policy.api_key_env},
        {"timeout_ms", c.policy.timeout_ms}}},
      {"toy_env",
       {{"candidates", c.toy_env.candidates},
        {"reveal_prob", c.toy_env.reveal_prob},
        {"max_turns", c.toy_env.max_turns},
        {"noise", c.toy_env.noise}}},
      {"toy",
       {{"steps", c.toy.steps},
        {"lr", c.toy.lr},
        {"group_size", c.toy.group_size},
        {"groups_per_step", c.toy.groups_per_step},
        {"epochs", c.toy.epochs},
        {"filter", c.toy.filter},
        {"clip_epsilon",
         c.toy.clip_epsilon ? ojson(*c.toy.clip_epsilon) : ojson(nullptr)}}},
      {"dataset", c.dataset},
      {"out_dir", c.out_dir},
      {"parallelism", c.parallelism},
      {"seed", c.seed},
  };
}

void apply_config_json(RunConfig& cfg, const nlohmann::json& patch) {
  ojson merged = config_to_json(cfg);
  merge(merged, patch, "");
  cfg = config_from_json(merged);
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded()) {
    throw ConfigError("config file is not valid JSON: " + path.string());
  }
  apply_config_json(cfg, parsed);
}

}  // namespace tirsql
