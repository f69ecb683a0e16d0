#pragma once

// Shared run configuration bound to CLI11 options. Every tunable has a
// default here and can come from flags or from a TOML config file with
// matching sections ([env], [ppo], [explore], [pidm], [probe]). Unknown
// keys are rejected.

#include <string>

#include <CLI11.hpp>

#include "explore/explore.hpp"
#include "pidm/pretrain.hpp"
#include "probe/probe.hpp"
#include "rl/ppo.hpp"
#include "sim/env.hpp"

namespace pidmrl::cli {

struct RunConfig {
  sim::EnvConfig env;
  std::string task = "reach";

  rl::PpoConfig ppo;
  int num_envs = 64;

  explore::ExploreConfig explore;

  pidm::PretrainConfig pretrain;
  int eval_bins = 10;

  probe::ProbeConfig probe;

  std::string init_mode = "random-pidm";
  std::string pidm_ckpt;

  std::uint64_t seed = 0;
  std::string out;
  int ckpt_count = 5;       // evenly spaced policy checkpoints
  int record_early = 0;     // dump transitions from the first N iterations
  int weight_log_iters = 100;

  // Builds the environment config for the configured task.
  sim::EnvConfig make_env_config() const;
};

void add_env_options(CLI::App* app, RunConfig& cfg);
void add_ppo_options(CLI::App* app, RunConfig& cfg);
void add_explore_options(CLI::App* app, RunConfig& cfg);
void add_pidm_options(CLI::App* app, RunConfig& cfg);
void add_probe_options(CLI::App* app, RunConfig& cfg);
void add_common_options(CLI::App* app, RunConfig& cfg);

// Default output root: --out falls back to $PIDMRL_OUT_ROOT/<leaf>.
std::string resolve_out(const std::string& out, const std::string& leaf);

// Translates a TOML config file (sections + key = value) into CLI-style
// arguments: [sec] key = v  ->  --sec.key=v. Underscores in keys normalize
// to dashes; '#' starts a comment. Unknown keys then fail option parsing,
// which is how bad config keys get rejected by name.
std::vector<std::string> config_file_to_args(const std::string& path);

nlohmann::json env_config_to_json(const sim::EnvConfig& cfg);
sim::EnvConfig env_config_from_json(const nlohmann::json& j);

}  // namespace pidmrl::cli
