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

// Command-line entry points: serve-tool, rollout, filter-data, evaluate and
// train-toy. Exit codes: 0 success, 2 configuration error, 3 dependency
// unreachable.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "tirsql/bench.h"
#include "tirsql/config.h"
#include "tirsql/grpo.h"
#include "tirsql/mock_policy.h"
#include "tirsql/parallel.h"
#include "tirsql/policy.h"
#include "tirsql/reward.h"
#include "tirsql/rollout.h"
#include "tirsql/sandbox.h"
#include "tirsql/tool_service.h"
#include "tirsql/toy_env.h"
#include "tirsql/trajectory_io.h"

namespace tirsql {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitUnreachable = 3;

// Collects flags that were actually given on the command line as a JSON
// patch, so they override the config file while unset flags do not.
class FlagPatch {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag,
                   const std::string& json_path, const std::string& help,
                   const T& shown_default) {
    auto value = std::make_shared<T>(shown_default);
    CLI::Option* opt = app->add_option(flag, *value, help);
    opt->default_str(CLI::detail::to_string(shown_default));
    setters_.push_back([opt, value, json_path](nlohmann::json& patch) {
      if (opt->count() > 0) {
        patch[nlohmann::json::json_pointer(json_path)] = *value;
      }
    });
    return opt;
  }

  nlohmann::json build() const {
    nlohmann::json patch = nlohmann::json::object();
    for (const auto& set : setters_) set(patch);
    return patch;
  }

 private:
  std::vector<std::function<void(nlohmann::json&)>> setters_;
};

struct CommonFlags {
  std::string config_file;
};

void add_common(CLI::App* app, FlagPatch& patch, CommonFlags& common,
                const RunConfig& d) {
  app->add_option("--config", common.config_file,
                  "JSON config file; flags override it, it overrides the "
                  "built-in defaults");
  patch.add(app, "--db-root", "/sandbox/db_root",
            "Directory holding <db>.sqlite or <db>/<db>.sqlite files",
            d.sandbox.db_root.string());
  patch.add(app, "--out-dir", "/out_dir", "Directory for all outputs",
            d.out_dir);
  patch.add(app, "--parallelism", "/parallelism",
            "Concurrent rollouts or queries", d.parallelism);
  patch.add(app, "--seed", "/seed", "Base sampling seed", d.seed);
}

void add_sandbox_flags(CLI::App* app, FlagPatch& patch, const RunConfig& d) {
  patch.add(app, "--timeout-ms", "/sandbox/timeout_ms",
            "Per-query timeout in milliseconds (30 s in the reported setup)",
            static_cast<long>(d.sandbox.timeout.count()));
  patch.add(app, "--row-limit", "/sandbox/row_limit",
            "Rows returned to the policy per tool call (10 in the tool "
            "description shown to the model)",
            d.sandbox.row_limit);
}

void add_policy_flags(CLI::App* app, FlagPatch& patch, const RunConfig& d,
                      std::string& tool_url) {
  patch.add(app, "--policy", "/policy/url",
            "Policy endpoint: an OpenAI-compatible base URL, mock:oracle, "
            "mock:constant:<SQL> or mock:script:<file.json>. The API key is "
            "read from the variable named by --api-key-env",
            d.policy.url);
  patch.add(app, "--model", "/policy/model", "Model name sent to the endpoint",
            d.policy.model);
  patch.add(app, "--api-key-env", "/policy/api_key_env",
            "Environment variable holding the endpoint API key",
            d.policy.api_key_env);
  patch.add(app, "--policy-timeout-ms", "/policy/timeout_ms",
            "Per-request policy timeout in milliseconds", d.policy.timeout_ms);
  app->add_option("--tool-url", tool_url,
                  "Send tool calls to a running serve-tool instance instead of "
                  "executing them in-process");
  patch.add(app, "--max-turns", "/rollout/max_turns",
            "Maximum assistant turns per rollout (6 in the reported setup)",
            d.rollout.max_turns);
  patch.add(app, "--max-sequence-tokens", "/rollout/max_sequence_tokens",
            "Context budget in tokens (8192 in the reported setup)",
            d.rollout.max_sequence_tokens);
  patch.add(app, "--format-reward", "/reward/format_magnitude",
            "Format reward magnitude (0.1 in the reported setup)",
            d.reward.format_magnitude);
  patch.add(app, "--exec-reward", "/reward/exec_magnitude",
            "Execution reward magnitude (0.1 in the reported setup)",
            d.reward.exec_magnitude);
  patch.add(app, "--result-reward", "/reward/result_magnitude",
            "Result reward magnitude (1.0 in the reported setup)",
            d.reward.result_magnitude);
}

RunConfig resolve_config(const CommonFlags& common, const FlagPatch& patch,
                         const nlohmann::json& extra = nlohmann::json::object()) {
  RunConfig cfg;
  if (!common.config_file.empty()) apply_config_file(cfg, common.config_file);
  apply_config_json(cfg, patch.build());
  apply_config_json(cfg, extra);
  cfg.validate();
  return cfg;
}

void require_db_root(const RunConfig& cfg) {
  std::error_code ec;
  if (cfg.sandbox.db_root.empty() ||
      !std::filesystem::is_directory(cfg.sandbox.db_root, ec)) {
    throw ConfigError("--db-root is not a directory: " +
                      cfg.sandbox.db_root.string());
  }
}

std::vector<TaskSample> require_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("--dataset is required");
  try {
    return load_dataset(cfg.dataset);
  } catch (const SchemaMismatch& e) {
    throw ConfigError(e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create --out-dir " + dir.string());
  return dir;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded()) throw ConfigError(path + " is not valid JSON");
  return parsed;
}

// Builds the policy named by cfg.policy.url. mock:oracle needs the prompts it
// will be asked, keyed by user text.
std::unique_ptr<PolicyEndpoint> make_policy(
    const RunConfig& cfg,
    const std::map<std::string, OraclePolicy::Target>& oracle_targets) {
  const std::string& spec = cfg.policy.url;
  if (spec.empty()) throw ConfigError("--policy is required");
  if (spec == "mock:oracle") {
    return std::make_unique<OraclePolicy>(oracle_targets);
  }
  if (spec.starts_with("mock:constant:")) {
    return std::make_unique<ConstantAnswerPolicy>(
        spec.substr(std::string("mock:constant:").size()));
  }
  if (spec.starts_with("mock:script:")) {
    nlohmann::json script =
        read_json_file(spec.substr(std::string("mock:script:").size()));
    try {
      if (script.is_array() && !script.empty() && script[0].is_array()) {
        return std::make_unique<StochasticScriptedPolicy>(
            script.get<std::vector<std::vector<std::string>>>());
      }
      return std::make_unique<ScriptedPolicy>(
          script.get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("script must be a JSON array of turns or of scripts");
    }
  }
  if (spec.starts_with("mock:")) throw ConfigError("unknown mock policy " + spec);
  if (!spec.starts_with("http://") && !spec.starts_with("https://")) {
    throw ConfigError("--policy must be an http(s) URL or a mock: spec");
  }
  HttpPolicyConfig http;
  http.base_url = spec;
  http.model = cfg.policy.model;
  http.timeout = std::chrono::milliseconds(cfg.policy.timeout_ms);
  if (const char* key = std::getenv(cfg.policy.api_key_env.c_str())) {
    http.api_key = key;
  }
  return std::make_unique<HttpChatPolicy>(http);
}

struct PreparedPrompts {
  std::vector<Prompt> prompts;
  std::vector<const TaskSample*> samples;
  std::map<std::string, OraclePolicy::Target> oracle;
};

PreparedPrompts prepare_prompts(const std::vector<TaskSample>& samples,
                                const Sandbox& sandbox) {
  PreparedPrompts out;
  std::map<std::string, SchemaDescription> schemas;
  for (const TaskSample& s : samples) {
    auto it = schemas.find(s.db_name);
    if (it == schemas.end()) {
      try {
        it = schemas.emplace(s.db_name, describe_schema(sandbox, s.db_name))
                 .first;
      } catch (const std::runtime_error& e) {
        std::cerr << "skipping sample " << s.sample_id << ": " << e.what()
                  << "\n";
        continue;
      }
    }
    PromptPair p = build_prompt(s, it->second);
    out.oracle[p.user] = {s.db_name, s.gold_sql};
    out.prompts.push_back({s.sample_id, s.db_name, p.system, p.user});
    out.samples.push_back(&s);
  }
  return out;
}

std::unique_ptr<SandboxClient> make_tool_client(const std::string& tool_url,
                                                const Sandbox& local) {
  if (tool_url.empty()) return nullptr;
  return std::make_unique<HttpSandboxClient>(tool_url,
                                             local.config().timeout * 2);
}

int cmd_serve_tool(const RunConfig& cfg, const std::string& bind_text) {
  require_db_root(cfg);
  BindAddress address;
  try {
    address = parse_bind_address(bind_text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  // Handle SIGINT/SIGTERM on a dedicated thread so the server can be stopped
  // outside signal-handler context.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ToolService service(cfg.sandbox);
  const int port = service.bind(address);
  if (port < 0) {
    std::cerr << "cannot bind " << bind_text << "\n";
    return kExitFailure;
  }
  std::jthread waiter([&service, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  std::cout << "serving on " << address.host << ":" << port << std::endl;
  service.listen();
  // Wake the waiter if the server stopped for another reason.
  pthread_kill(waiter.native_handle(), SIGTERM);
  std::cout << "stopped" << std::endl;
  return kExitOk;
}

int cmd_rollout(const RunConfig& cfg, const std::string& tool_url) {
  require_db_root(cfg);
  std::vector<TaskSample> samples = require_dataset(cfg);
  Sandbox sandbox(cfg.sandbox);
  PreparedPrompts prepared = prepare_prompts(samples, sandbox);
  std::unique_ptr<PolicyEndpoint> policy = make_policy(cfg, prepared.oracle);
  std::unique_ptr<SandboxClient> remote = make_tool_client(tool_url, sandbox);
  const SandboxClient& tools = remote ? *remote : sandbox;
  const std::filesystem::path dir = prepare_out_dir(cfg);

  std::ofstream out(dir / "trajectories.jsonl", std::ios::binary);
  if (!out) throw ConfigError("cannot write trajectories.jsonl");
  std::size_t policy_errors = 0;
  std::size_t written = 0;
  for (std::size_t i = 0; i < prepared.prompts.size(); ++i) {
    const TaskSample& sample = *prepared.samples[i];
    RolloutGroup group =
        run_group(prepared.prompts[i], *policy, tools, cfg.rollout);
    for (Trajectory& t : group.trajectories) {
      if (t.termination == Termination::kPolicyError) ++policy_errors;
      try {
        t.reward = total_reward(t, sample.gold_sql, sandbox, cfg.reward);
      } catch (const GoldExecutionFailed& e) {
        std::cerr << "sample " << sample.sample_id << ": " << e.what() << "\n";
      }
      write_jsonl_line(out, t);
      ++written;
    }
  }
  std::cout << "wrote " << written << " trajectories to "
            << (dir / "trajectories.jsonl").string() << "\n";
  if (written > 0 && policy_errors == written) {
    std::cerr << "every rollout failed to reach the policy\n";
    return kExitUnreachable;
  }
  return kExitOk;
}

int cmd_filter_data(const RunConfig& cfg) {
  require_db_root(cfg);
  std::vector<TaskSample> samples = require_dataset(cfg);
  Sandbox sandbox(cfg.sandbox);
  DatasetFilterResult result = filter_dataset(samples, sandbox, cfg.parallelism);
  const std::filesystem::path dir = prepare_out_dir(cfg);
  std::ofstream kept(dir / "kept.jsonl", std::ios::binary);
  for (const TaskSample& s : result.kept) kept << sample_to_json(s).dump() << "\n";
  std::ofstream dropped(dir / "dropped.jsonl", std::ios::binary);
  for (const DroppedSample& d : result.dropped) {
    nlohmann::ordered_json rec = sample_to_json(d.sample);
    rec["drop_reason"] = std::string(to_string(d.reason));
    rec["drop_detail"] = d.detail;
    dropped << rec.dump() << "\n";
  }
  if (!kept || !dropped) throw std::runtime_error("cannot write filter output");
  std::cout << "kept " << result.kept.size() << ", dropped "
            << result.dropped.size() << "\n";
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& tool_url,
                 const std::string& paradigm) {
  require_db_root(cfg);
  std::vector<TaskSample> samples = require_dataset(cfg);
  Sandbox sandbox(cfg.sandbox);
  PreparedPrompts prepared = prepare_prompts(samples, sandbox);
  std::unique_ptr<PolicyEndpoint> policy = make_policy(cfg, prepared.oracle);
  std::unique_ptr<SandboxClient> remote = make_tool_client(tool_url, sandbox);

  EvalOptions options;
  options.rollout = cfg.rollout;
  options.reward = cfg.reward;
  options.parallelism = cfg.parallelism;
  options.config = config_to_json(cfg);
  EvalReport report = evaluate(samples, *policy, remote ? *remote : sandbox,
                               sandbox, options);
  const std::filesystem::path dir = prepare_out_dir(cfg);
  emit_report(report, dir, paradigm);
  std::cout << "EX " << report.n_correct << "/" << report.n_samples << " = "
            << report.ex_percent << "%\n";
  std::size_t unreachable = 0;
  for (const SampleVerdict& v : report.verdicts) {
    unreachable += v.termination == "PolicyError";
  }
  if (report.n_samples > 0 && unreachable == report.n_samples) {
    std::cerr << "every rollout failed to reach the policy\n";
    return kExitUnreachable;
  }
  return kExitOk;
}

int cmd_train_toy(const RunConfig& cfg, const std::string& kl) {
  if (kl != "off") throw ConfigError("only --kl off is supported");
  ToyEnvConfig env_cfg = cfg.toy_env;
  env_cfg.reward = cfg.reward;
  ToyEnv env(env_cfg);
  ToyTrainConfig train = cfg.toy;
  train.filter_policy = cfg.filter;
  train.seed = cfg.seed;
  ToyRun run = train_toy(env, train);

  const std::filesystem::path dir = prepare_out_dir(cfg);
  std::ofstream csv(dir / "curve.csv", std::ios::binary);
  csv << curve_csv(run.curve);
  nlohmann::ordered_json summary = {
      {"steps", run.curve.size()},
      {"filter", train.filter},
      {"noise", env_cfg.noise},
      {"final_mean_reward", final_mean_reward(run.curve)},
      {"declining_tail", has_declining_tail(run.curve)},
      {"env_max_expected_reward", env.max_expected_reward()},
      {"config", config_to_json(cfg)},
  };
  std::ofstream js(dir / "summary.json", std::ios::binary);
  js << summary.dump(2) << "\n";
  if (!csv || !js) throw std::runtime_error("cannot write toy outputs");
  std::cout << "final mean reward " << final_mean_reward(run.curve) << "\n";
  return kExitOk;
}

int run(int argc, char** argv) {
  const RunConfig d;
  CLI::App app{"Multi-turn tool-integrated rollouts, rewards and GRPO-Filter "
               "math for text-to-SQL"};
  app.require_subcommand(1);

  CommonFlags serve_common, roll_common, filt_common, eval_common, toy_common;
  FlagPatch serve_patch, roll_patch, filt_patch, eval_patch, toy_patch;
  std::string bind_text = "127.0.0.1:8811";
  std::string roll_tools, eval_tools;
  std::string paradigm = "TIR-SQL (mock)";
  std::string kl = "off";
  std::string filter_flag;

  CLI::App* serve = app.add_subcommand("serve-tool", "Serve the SQL tool over HTTP");
  add_common(serve, serve_patch, serve_common, d);
  add_sandbox_flags(serve, serve_patch, d);
  serve->add_option("--bind", bind_text, "host:port to listen on")
      ->capture_default_str();

  CLI::App* roll = app.add_subcommand(
      "rollout", "Sample rollout groups for every dataset sample and score them");
  add_common(roll, roll_patch, roll_common, d);
  add_sandbox_flags(roll, roll_patch, d);
  add_policy_flags(roll, roll_patch, d, roll_tools);
  roll_patch.add(roll, "--dataset", "/dataset", "BIRD/SPIDER-style JSON or JSONL",
                 d.dataset);
  roll_patch.add(roll, "--group-size", "/rollout/group_size",
                 "Rollouts per prompt (5 in the reported setup)",
                 d.rollout.group_size);
  roll_patch.add(roll, "--temperature", "/rollout/temperature",
                 "Sampling temperature (0.6 for training in the reported setup)",
                 d.rollout.temperature);

  CLI::App* filt = app.add_subcommand(
      "filter-data", "Drop samples whose gold SQL fails or returns no rows");
  add_common(filt, filt_patch, filt_common, d);
  add_sandbox_flags(filt, filt_patch, d);
  filt_patch.add(filt, "--dataset", "/dataset", "BIRD/SPIDER-style JSON or JSONL",
                 d.dataset);

  CLI::App* eval = app.add_subcommand(
      "evaluate", "Greedy pass@1 execution accuracy (temperature 0)");
  add_common(eval, eval_patch, eval_common, d);
  add_sandbox_flags(eval, eval_patch, d);
  add_policy_flags(eval, eval_patch, d, eval_tools);
  eval_patch.add(eval, "--dataset", "/dataset", "BIRD/SPIDER-style JSON or JSONL",
                 d.dataset);
  eval->add_option("--paradigm", paradigm, "Row label in report.md")
      ->capture_default_str();

  CLI::App* toy = app.add_subcommand(
      "train-toy", "GRPO with or without filtering on the toy environment");
  add_common(toy, toy_patch, toy_common, d);
  toy_patch.add(toy, "--steps", "/toy/steps", "Training steps", d.toy.steps);
  toy_patch.add(toy, "--lr", "/toy/lr",
                "Learning rate (1e-6, the reported full-scale rate)", d.toy.lr);
  toy_patch.add(toy, "--group-size", "/toy/group_size",
                "Episodes per group (5 in the reported setup)",
                d.toy.group_size);
  toy_patch.add(toy, "--batch-size", "/toy/groups_per_step",
                "Groups per step (64 in the reported setup)",
                d.toy.groups_per_step);
  toy_patch.add(toy, "--epochs", "/toy/epochs", "Gradient steps per batch",
                d.toy.epochs);
  toy->add_option("--filter", filter_flag, "on or off (default off)")
      ->check(CLI::IsMember({"on", "off"}));
  toy_patch.add(toy, "--tau", "/filter/tau",
                "Keep trajectories with quality score strictly above tau",
                d.filter.tau);
  toy_patch.add(toy, "--noise", "/toy_env/noise",
                "Fraction of episodes with a forced void first turn",
                d.toy_env.noise);
  toy_patch.add(toy, "--candidates", "/toy_env/candidates",
                "Candidate answers in the toy task", d.toy_env.candidates);
  toy_patch.add(toy, "--reveal-prob", "/toy_env/reveal_prob",
                "Probability that a probe reveals the answer",
                d.toy_env.reveal_prob);
  toy_patch.add(toy, "--toy-max-turns", "/toy_env/max_turns",
                "Turn budget per toy episode", d.toy_env.max_turns);
  toy_patch.add(toy, "--clip-epsilon", "/toy/clip_epsilon",
                "PPO-style ratio clipping (off unless given)", 0.2);
  toy->add_option("--kl", kl, "KL regularization; only off is supported")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (serve->parsed()) {
      return cmd_serve_tool(resolve_config(serve_common, serve_patch), bind_text);
    }
    if (roll->parsed()) {
      return cmd_rollout(resolve_config(roll_common, roll_patch), roll_tools);
    }
    if (filt->parsed()) {
      return cmd_filter_data(resolve_config(filt_common, filt_patch));
    }
    if (eval->parsed()) {
      return cmd_evaluate(resolve_config(eval_common, eval_patch), eval_tools,
                          paradigm);
    }
    if (toy->parsed()) {
      nlohmann::json extra = nlohmann::json::object();
      if (!filter_flag.empty()) extra["toy"]["filter"] = filter_flag == "on";
      return cmd_train_toy(resolve_config(toy_common, toy_patch, extra), kl);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace
}  // namespace tirsql

int main(int argc, char** argv) { return tirsql::run(argc, argv); }
