#pragma once

// On-policy rollout collection over a vectorized environment, including the
// per-environment history rings feeding the policy networks (noisy frames)
// and, on request, the noise-free windows used for intrinsic rewards and
// dataset recording.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "nn/mat.hpp"
#include "policy/nets.hpp"
#include "sim/env.hpp"
#include "util/rng.hpp"

namespace pidmrl::rl {

using MatF = nn::Mat<float>;

struct RolloutBatch {
  int t_steps = 0;
  int n_envs = 0;
  int obs_dim = 0;
  int act_dim = 0;

  // Row index = t * n_envs + e.
  MatF obs;           // noisy task observations
  MatF frames;        // noisy proprio history, oldest..newest
  MatF actions_hist;  // action history, oldest..newest
  MatF actions;       // sampled actions (pre-clamp)
  MatF mu_old;        // policy means at collection time

  std::vector<double> rewards, logp_old, values;
  std::vector<std::uint8_t> dones;
  std::vector<double> bootstrap;  // per env; zero where the last step ended
  std::vector<double> advantages, returns;

  // Optional extras (filled when requested).
  std::vector<sim::StepOutput> steps;  // per (t, e); for datasets
  MatF clean_frames;                   // noise-free windows
  MatF clean_delta;                    // wrap-aware x_{t+1} - x_t
  std::vector<std::uint8_t> window_complete;  // >= k_hist steps into episode

  sim::RewardTerms reward_term_sums;
  int episodes_finished = 0;

  int flat() const { return t_steps * n_envs; }
};

struct CollectOptions {
  bool keep_transitions = false;
  bool keep_clean_windows = false;
};

class RolloutCollector {
 public:
  RolloutCollector(sim::VecEnv& envs, int k_hist);

  // One rollout of t_steps per sub-environment; history rings persist across
  // calls so consecutive rollouts are one continuous stream per environment.
  void collect(const policy::Net& actor, std::span<const float> log_std,
               const policy::Net& critic, int t_steps, util::Rng& rng,
               const CollectOptions& opt, RolloutBatch& out);

  // Fills the policy inputs for the current state of every environment.
  void fill_policy_inputs(MatF& obs, MatF& frames, MatF& actions_hist) const;

  // Advances the history rings after an externally driven VecEnv::step.
  void advance_rings(const std::vector<sim::StepOutput>& outs);

  int k_hist() const { return k_hist_; }
  sim::VecEnv& envs() { return *envs_; }

 private:
  struct Ring {
    std::vector<float> frames;        // k * proprio_dim, oldest..newest
    std::vector<float> actions;       // k * action_dim
    std::vector<double> clean_frames; // k * proprio_dim
    int steps_in_episode = 0;
  };

  void reset_ring(Ring& r, const sim::ArmEnv& env) const;
  void push_ring(Ring& r, const sim::Proprio& noisy, const sim::Proprio& clean,
                 const sim::Vec2& action) const;

  sim::VecEnv* envs_;
  int k_hist_;
  std::vector<Ring> rings_;
};

struct ActionStats {
  std::array<double, 2> mean{};
  std::array<double, 2> stddev{};
  bool pass = false;  // |mean| < 0.2 and std in [0.8, 1.2] per dimension
};

// Empirical statistics of sampled actions on freshly reset observations.
ActionStats initial_action_stats(const policy::Net& actor,
                                 std::span<const float> log_std,
                                 const sim::EnvConfig& env_cfg, int k_hist,
                                 int n_samples, std::uint64_t seed);

}  // namespace pidmrl::rl
