#pragma once

// Planar 2-link arm in a vertical gravity plane. Uniform thin rods, joint
// angles measured from the straight-down pose, q2 relative to link 1.
// Actuated by a per-substep PD loop tracking absolute joint-position targets.

#include <array>
#include <cstdint>
#include <vector>

#include "util/rng.hpp"

namespace pidmrl::sim {

using Vec2 = std::array<double, 2>;
using Proprio = std::array<double, 4>;  // q1, q2 [rad], qd1, qd2 [rad/s]

struct ArmConfig {
  double l1 = 0.5, l2 = 0.5;    // link lengths [m]
  double m1 = 1.0, m2 = 1.0;    // nominal link masses [kg]
  double gravity = 9.81;        // [m/s^2]
  double kp = 30.0;             // PD gains [N m/rad], [N m s/rad]
  double kd = 1.0;
  double tau_max = 20.0;        // motor torque limit [N m]
  double damping = 0.05;        // nominal viscous joint damping [N m s/rad]
  double dt = 0.005;            // integration step [s]
  int substeps = 4;             // control period = dt * substeps (50 Hz)
  double action_limit = 2.5;    // joint target range [rad]
  double velocity_limit = 30.0; // episode terminates beyond this [rad/s]
  int episode_steps = 200;      // control steps per episode (4 s)

  double control_dt() const { return dt * substeps; }
};

struct RandomizationConfig {
  bool enabled = true;
  double mass_scale_lo = 0.8, mass_scale_hi = 1.2;
  double damping_scale_lo = 0.5, damping_scale_hi = 1.5;
  double push_torque = 2.0;        // external bias magnitude bound [N m]
  double push_interval_mean = 2.0; // mean seconds between bias resamples
};

struct NoiseConfig {
  double pos = 0.01;  // uniform observation noise bound [rad]
  double vel = 0.15;  // [rad/s]
};

// Full physical state. Everything step() needs is in here, so re-stepping a
// stored state reproduces the next state bit-exactly.
struct ArmState {
  Vec2 q{0.0, 0.0};
  Vec2 qd{0.0, 0.0};
  Vec2 mass{1.0, 1.0};
  Vec2 damping{0.05, 0.05};
  // External torque bias per control step (2 values each), fixed at reset.
  std::vector<double> push_sched;
  int step = 0;
};

struct StepInfo {
  double tau_sq_mean = 0.0;  // mean |tau|^2 over substeps [N^2 m^2]
  Vec2 qdd{0.0, 0.0};        // (qd' - qd) / control_dt [rad/s^2]
  bool velocity_exceeded = false;
  bool diverged = false;
};

// Wraps into (-pi, pi].
double wrap_angle(double a);
// Wrap-aware difference wrap(b - a) in (-pi, pi].
double wrap_diff(double b, double a);

// Advances one control step (substeps x semi-implicit Euler) under joint
// target `action` (clamped to +-action_limit). Pure function of (cfg, state,
// action); consumes no randomness.
StepInfo arm_step(const ArmConfig& cfg, ArmState& state, const Vec2& action);

// Kinetic + potential energy; potential is zero at the hanging rest pose.
double arm_energy(const ArmConfig& cfg, const ArmState& state);

Vec2 end_effector(const ArmConfig& cfg, const Vec2& q);       // (x, z) [m]
Vec2 end_effector_velocity(const ArmConfig& cfg, const Vec2& q,
                           const Vec2& qd);                   // [m/s]

// Samples physical parameters and the external-torque schedule for one
// episode. With cfg.enabled == false this yields nominal parameters and a
// zero schedule.
void apply_domain_randomization(const ArmConfig& arm,
                                const RandomizationConfig& cfg,
                                ArmState& state, int episode_steps,
                                util::Rng& rng);

Proprio proprio_of(const ArmState& s);
Proprio add_observation_noise(const Proprio& x, const NoiseConfig& noise,
                              util::Rng& rng);

inline Proprio mirror_proprio(const Proprio& x) {
  return {wrap_angle(-x[0]), wrap_angle(-x[1]), -x[2], -x[3]};
}
inline Vec2 mirror_action(const Vec2& a) { return {-a[0], -a[1]}; }
ArmState mirror_state(const ArmState& s);

}  // namespace pidmrl::sim
