#pragma once

// Task definitions sharing the one embodiment: end-effector reach, |
// end-effector velocity tracking, and joint posture. Commands are sampled
// once per episode. Observation layout: command (2) | noisy proprio (4) |
// previous action (2).

#include <array>
#include <string>

#include "sim/arm.hpp"
#include "util/rng.hpp"

namespace pidmrl::sim {

enum class TaskId { Reach, Track, Posture };

TaskId task_from_name(const std::string& name);
const char* task_name(TaskId id);

struct TaskConfig {
  TaskId id = TaskId::Reach;
  bool task_term_enabled = true;  // exploration runs disable the task term
  bool commands_enabled = true;   // false pins the command to zero

  // Task-term length scales (squared-distance denominators).
  double reach_scale = 0.1;    // [m^2]
  double track_scale = 0.25;   // [(m/s)^2]
  double posture_scale = 0.25; // [rad^2]

  // Command sampling ranges.
  double reach_radius_lo = 0.1, reach_radius_hi = 0.95;  // [m]
  double track_speed = 0.5;                              // [m/s] per axis
  double posture_range = 2.0;                            // [rad] per joint

  // Regularizer weights. The joint-velocity weight is rescaled from the
  // legged-robot tuning (-5e-2) to match this embodiment's velocity scale.
  double w_torque = -2e-5;
  double w_joint_vel = -5e-4;
  double w_joint_acc = -5e-6;
  double w_action_mag = -0.01;
  double w_action_smooth = -0.01;
  double w_termination = -80.0;
};

struct RewardTerms {
  double task = 0.0;
  double joint_torque = 0.0;
  double joint_vel = 0.0;
  double joint_acc = 0.0;
  double action_mag = 0.0;
  double action_smooth = 0.0;
  double termination = 0.0;

  double total() const {
    return task + joint_torque + joint_vel + joint_acc + action_mag +
           action_smooth + termination;
  }
};

// Velocity channels are compressed by this factor wherever proprioception
// feeds a network (observations, history windows, delta targets). Raw
// joint velocities reach tens of rad/s and would blow up the ELU stacks;
// datasets on disk stay in raw units.
inline constexpr double kVelObsScale = 0.1;

inline constexpr int kCommandDim = 2;
inline constexpr int kProprioDim = 4;
inline constexpr int kActionDim = 2;
inline constexpr int kObsDim = kCommandDim + kProprioDim + kActionDim;

Vec2 sample_command(const TaskConfig& task, util::Rng& rng);

RewardTerms compute_reward(const TaskConfig& task, const ArmConfig& arm,
                           const ArmState& state, const StepInfo& info,
                           const Vec2& action, const Vec2& prev_action,
                           const Vec2& command, bool terminated);

Vec2 mirror_command(TaskId id, const Vec2& c);

// Per-channel sign flips that realize the mirror transform on a full
// observation vector of this task.
std::array<double, kObsDim> obs_mirror_signs(TaskId id);

}  // namespace pidmrl::sim
