#pragma once

// Task-agnostic exploration-driven data collection. A policy is trained with
// the regularizer rewards plus an intrinsic bonus equal to the clipped
// ensemble disagreement; noise-free transitions stream into the returned
// dataset. Until the buffer holds the minimum number of windows the
// intrinsic reward is zero and only the critic is updated.

#include <functional>
#include <string>
#include <vector>

#include "explore/ensemble.hpp"
#include "rl/ppo.hpp"
#include "sim/env.hpp"

namespace pidmrl::explore {

struct ExploreConfig {
  int iters = 800;
  int num_envs = 64;
  std::size_t min_buffer_windows = 10000;  // N_D
  int retrain_interval = 10;
  double c_ir = 10.0;
  double r_i_max = 30.0;
  EnsembleConfig ensemble;
  rl::PpoConfig ppo;
  pidm::PidmShape shape;
  std::vector<int> policy_hidden = {128, 128, 128};
  // Ablation hook: intrinsic reward from a single member's prediction error
  // instead of the ensemble spread. Off by default; the spread is the
  // default signal because pure prediction error chases aleatoric noise.
  bool single_member_error = false;
};

struct ExploreLogRow {
  int iteration = 0;
  double mean_intrinsic = 0.0;
  double mean_extrinsic = 0.0;
  std::size_t buffer_windows = 0;
  bool retrained = false;
  bool actor_updated = false;
  // Bit-level fingerprint of the actor parameters after the update; equal
  // hashes mean bit-unchanged parameters.
  std::uint64_t actor_param_hash = 0;
};

struct ExploreResult {
  sim::Dataset dataset;
  std::vector<ExploreLogRow> log;
  std::uint64_t incomplete_windows = 0;  // steps with r_i forced to 0
  int retrains = 0;
};

// env_cfg's task term and command sampling are disabled internally; the
// extrinsic signal is the regularizer set only.
ExploreResult collect_exploration_data(
    const sim::EnvConfig& env_cfg, const ExploreConfig& cfg,
    std::uint64_t seed,
    const std::function<void(const ExploreLogRow&)>& on_iteration = {});

}  // namespace pidmrl::explore
