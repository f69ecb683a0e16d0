#include "sim/task.hpp"

#include <cmath>
#include <numbers>

#include "util/errors.hpp"

namespace pidmrl::sim {

TaskId task_from_name(const std::string& name) {
  if (name == "reach") return TaskId::Reach;
  if (name == "track") return TaskId::Track;
  if (name == "posture") return TaskId::Posture;
  throw util::ConfigError("unknown task: " + name);
}

const char* task_name(TaskId id) {
  switch (id) {
    case TaskId::Reach: return "reach";
    case TaskId::Track: return "track";
    default: return "posture";
  }
}

Vec2 sample_command(const TaskConfig& task, util::Rng& rng) {
  if (!task.commands_enabled) return {0.0, 0.0};
  switch (task.id) {
    case TaskId::Reach: {
      // Uniform over the annulus area.
      const double r_lo2 = task.reach_radius_lo * task.reach_radius_lo;
      const double r_hi2 = task.reach_radius_hi * task.reach_radius_hi;
      const double r = std::sqrt(rng.uniform(r_lo2, r_hi2));
      const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
      return {r * std::sin(a), -r * std::cos(a)};
    }
    case TaskId::Track:
      return {rng.uniform(-task.track_speed, task.track_speed),
              rng.uniform(-task.track_speed, task.track_speed)};
    default:
      return {rng.uniform(-task.posture_range, task.posture_range),
              rng.uniform(-task.posture_range, task.posture_range)};
  }
}

RewardTerms compute_reward(const TaskConfig& task, const ArmConfig& arm,
                           const ArmState& state, const StepInfo& info,
                           const Vec2& action, const Vec2& prev_action,
                           const Vec2& command, bool terminated) {
  RewardTerms r;
  if (task.task_term_enabled) {
    switch (task.id) {
      case TaskId::Reach: {
        const Vec2 ee = end_effector(arm, state.q);
        const double dx = ee[0] - command[0], dz = ee[1] - command[1];
        r.task = std::exp(-(dx * dx + dz * dz) / task.reach_scale);
        break;
      }
      case TaskId::Track: {
        const Vec2 v = end_effector_velocity(arm, state.q, state.qd);
        const double dx = v[0] - command[0], dz = v[1] - command[1];
        r.task = std::exp(-(dx * dx + dz * dz) / task.track_scale);
        break;
      }
      case TaskId::Posture: {
        const double d0 = wrap_diff(state.q[0], command[0]);
        const double d1 = wrap_diff(state.q[1], command[1]);
        r.task = std::exp(-(d0 * d0 + d1 * d1) / task.posture_scale);
        break;
      }
    }
  }
  r.joint_torque = task.w_torque * info.tau_sq_mean;
  r.joint_vel = task.w_joint_vel *
                (state.qd[0] * state.qd[0] + state.qd[1] * state.qd[1]);
  r.joint_acc = task.w_joint_acc *
                (info.qdd[0] * info.qdd[0] + info.qdd[1] * info.qdd[1]);
  r.action_mag =
      task.w_action_mag * (action[0] * action[0] + action[1] * action[1]);
  const double ds0 = prev_action[0] - action[0];
  const double ds1 = prev_action[1] - action[1];
  r.action_smooth = task.w_action_smooth * (ds0 * ds0 + ds1 * ds1);
  if (terminated) r.termination = task.w_termination;
  return r;
}

Vec2 mirror_command(TaskId id, const Vec2& c) {
  switch (id) {
    case TaskId::Reach:
    case TaskId::Track:
      return {-c[0], c[1]};
    default:
      return {wrap_angle(-c[0]), wrap_angle(-c[1])};
  }
}

std::array<double, kObsDim> obs_mirror_signs(TaskId id) {
  std::array<double, kObsDim> s;
  s.fill(-1.0);
  if (id == TaskId::Reach || id == TaskId::Track) s[1] = 1.0;  // z component
  return s;
}

}  // namespace pidmrl::sim
