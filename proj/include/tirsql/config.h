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

#ifndef TIRSQL_CONFIG_H_
#define TIRSQL_CONFIG_H_

#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "tirsql/grpo.h"
#include "tirsql/reward.h"
#include "tirsql/rollout.h"
#include "tirsql/sandbox.h"
#include "tirsql/toy_env.h"

namespace tirsql {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PolicyConfig {
  std::string url;
  std::string model = "default";
  // Name of the environment variable holding the API key. The key itself is
  // never stored in a config file or accepted as a flag.
  std::string api_key_env = "TIRSQL_API_KEY";
  int timeout_ms = 120000;
};

struct RunConfig {
  SandboxConfig sandbox;
  RolloutConfig rollout;
  RewardConfig reward;
  FilterPolicy filter;
  PolicyConfig policy;
  ToyEnvConfig toy_env;
  ToyTrainConfig toy;
  std::string dataset;
  std::string out_dir = "out";
  std::size_t parallelism = 8;
  std::uint64_t seed = 0;

  // The toy trainer defaults to the full-scale run's batch size (64 prompts
  // per step) and learning rate (1e-6). That rate barely moves a toy policy;
  // toy experiments pass their own.
  RunConfig();

  // Throws ConfigError.
  void validate() const;
};

// Nested JSON with every setting; never contains secrets.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

// Overlays the keys present in `patch`. Unknown keys and wrong types throw
// ConfigError naming the offending path.
void apply_config_json(RunConfig& cfg, const nlohmann::json& patch);

// Reads a JSON config file and overlays it on `cfg`. Throws ConfigError.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

}  // namespace tirsql

#endif  // TIRSQL_CONFIG_H_
