#pragma once

// Episode management around the arm dynamics: reset sampling, observation
// noise, reward evaluation, auto-reset, and a vectorized wrapper stepping
// sub-environments in fixed index order.

#include <vector>

#include "sim/arm.hpp"
#include "sim/task.hpp"
#include "util/rng.hpp"

namespace pidmrl::sim {

struct EnvConfig {
  ArmConfig arm;
  RandomizationConfig randomization;
  NoiseConfig noise;
  TaskConfig task;
  double init_angle_range = std::numbers::pi;  // reset q ~ U(-range, range)
};

struct StepOutput {
  Proprio x_t;          // noise-free proprioception before the step
  Proprio x_tp1;        // noise-free proprioception after the step (pre-reset)
  Vec2 action;          // clamped action actually applied
  bool done = false;    // timeout or termination; episode was auto-reset
  bool terminated = false;  // velocity limit or divergence (not timeout)
  RewardTerms reward;
  long episode_id = 0;
};

class ArmEnv {
 public:
  ArmEnv(const EnvConfig& cfg, std::uint64_t seed, int env_id);

  void reset();
  StepOutput step(const Vec2& action);

  // Observation of the current state: command | noisy proprio | prev action.
  void observation(double* out) const;

  const ArmState& state() const { return state_; }
  ArmState& mutable_state() { return state_; }
  const Vec2& command() const { return command_; }
  const Vec2& prev_action() const { return prev_action_; }
  Proprio proprio() const { return proprio_of(state_); }
  const Proprio& noisy_proprio() const { return noisy_; }
  long episode_id() const { return episode_id_; }
  int env_id() const { return env_id_; }
  const EnvConfig& config() const { return cfg_; }

 private:
  EnvConfig cfg_;
  util::Rng rng_;
  int env_id_ = 0;
  long episode_id_ = -1;
  ArmState state_;
  Vec2 command_{0.0, 0.0};
  Vec2 prev_action_{0.0, 0.0};
  Proprio noisy_{0.0, 0.0, 0.0, 0.0};
};

class VecEnv {
 public:
  VecEnv(const EnvConfig& cfg, int num_envs, std::uint64_t seed);

  int size() const { return static_cast<int>(envs_.size()); }
  ArmEnv& env(int i) { return envs_[i]; }
  const ArmEnv& env(int i) const { return envs_[i]; }
  const EnvConfig& config() const { return cfg_; }

  void reset_all();
  // actions: size x 2, outputs one StepOutput per sub-environment.
  void step(const std::vector<Vec2>& actions, std::vector<StepOutput>& out);
  // observations: size x kObsDim, row-major.
  void observations(std::vector<double>& out) const;

 private:
  EnvConfig cfg_;
  std::vector<ArmEnv> envs_;
};

}  // namespace pidmrl::sim
