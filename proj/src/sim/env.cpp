#include "sim/env.hpp"

#include <algorithm>
#include <cmath>

namespace pidmrl::sim {

ArmEnv::ArmEnv(const EnvConfig& cfg, std::uint64_t seed, int env_id)
    : cfg_(cfg),
      rng_(util::Rng(seed).split(static_cast<std::uint64_t>(env_id))),
      env_id_(env_id) {
  reset();
}

void ArmEnv::reset() {
  episode_id_ += 1;
  state_ = ArmState{};
  state_.q = {rng_.uniform(-cfg_.init_angle_range, cfg_.init_angle_range),
              rng_.uniform(-cfg_.init_angle_range, cfg_.init_angle_range)};
  state_.q = {wrap_angle(state_.q[0]), wrap_angle(state_.q[1])};
  state_.qd = {0.0, 0.0};
  apply_domain_randomization(cfg_.arm, cfg_.randomization, state_,
                             cfg_.arm.episode_steps, rng_);
  command_ = sample_command(cfg_.task, rng_);
  prev_action_ = {0.0, 0.0};
  noisy_ = add_observation_noise(proprio_of(state_), cfg_.noise, rng_);
}

StepOutput ArmEnv::step(const Vec2& action) {
  StepOutput out;
  out.x_t = proprio_of(state_);
  out.episode_id = episode_id_;
  const double lim = cfg_.arm.action_limit;
  out.action = {std::clamp(action[0], -lim, lim),
                std::clamp(action[1], -lim, lim)};

  const StepInfo info = arm_step(cfg_.arm, state_, out.action);
  out.terminated = info.velocity_exceeded || info.diverged;
  out.x_tp1 = proprio_of(state_);
  if (info.diverged) out.x_tp1 = out.x_t;  // keep emitted data finite
  const bool timeout = state_.step >= cfg_.arm.episode_steps;
  out.done = out.terminated || timeout;

  out.reward = compute_reward(cfg_.task, cfg_.arm, state_, info, out.action,
                              prev_action_, command_, out.terminated);
  prev_action_ = out.action;

  if (out.done) {
    reset();
  } else {
    noisy_ = add_observation_noise(proprio_of(state_), cfg_.noise, rng_);
  }
  return out;
}

void ArmEnv::observation(double* out) const {
  out[0] = command_[0];
  out[1] = command_[1];
  out[2] = noisy_[0];
  out[3] = noisy_[1];
  out[4] = noisy_[2] * kVelObsScale;
  out[5] = noisy_[3] * kVelObsScale;
  out[6] = prev_action_[0];
  out[7] = prev_action_[1];
}

VecEnv::VecEnv(const EnvConfig& cfg, int num_envs, std::uint64_t seed)
    : cfg_(cfg) {
  envs_.reserve(num_envs);
  for (int i = 0; i < num_envs; ++i) envs_.emplace_back(cfg, seed, i);
}

void VecEnv::reset_all() {
  for (auto& e : envs_) e.reset();
}

void VecEnv::step(const std::vector<Vec2>& actions,
                  std::vector<StepOutput>& out) {
  out.resize(envs_.size());
  for (std::size_t i = 0; i < envs_.size(); ++i)
    out[i] = envs_[i].step(actions[i]);
}

void VecEnv::observations(std::vector<double>& out) const {
  out.resize(envs_.size() * kObsDim);
  for (std::size_t i = 0; i < envs_.size(); ++i)
    envs_[i].observation(out.data() + i * kObsDim);
}

}  // namespace pidmrl::sim
