#include "cli/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "util/errors.hpp"

namespace pidmrl::cli {

sim::EnvConfig RunConfig::make_env_config() const {
  sim::EnvConfig e = env;
  e.task.id = sim::task_from_name(task);
  return e;
}

void add_env_options(CLI::App* app, RunConfig& cfg) {
  auto& a = cfg.env.arm;
  app->add_option("--env.l1", a.l1, "link 1 length [m]");
  app->add_option("--env.l2", a.l2, "link 2 length [m]");
  app->add_option("--env.m1", a.m1, "link 1 mass [kg]");
  app->add_option("--env.m2", a.m2, "link 2 mass [kg]");
  app->add_option("--env.gravity", a.gravity, "gravity [m/s^2]");
  app->add_option("--env.kp", a.kp, "PD position gain");
  app->add_option("--env.kd", a.kd, "PD velocity gain");
  app->add_option("--env.tau-max", a.tau_max, "motor torque limit [N m]");
  app->add_option("--env.damping", a.damping, "viscous joint damping");
  app->add_option("--env.dt", a.dt, "integration step [s]");
  app->add_option("--env.substeps", a.substeps, "substeps per control step");
  app->add_option("--env.episode-steps", a.episode_steps,
                  "control steps per episode");
  app->add_option("--env.action-limit", a.action_limit,
                  "joint target range [rad]");
  app->add_option("--env.velocity-limit", a.velocity_limit,
                  "termination velocity [rad/s]");
  app->add_option("--env.init-angle-range", cfg.env.init_angle_range,
                  "reset angle range [rad]");

  auto& r = cfg.env.randomization;
  app->add_option("--env.randomize", r.enabled, "domain randomization on/off");
  app->add_option("--env.mass-scale-lo", r.mass_scale_lo, "");
  app->add_option("--env.mass-scale-hi", r.mass_scale_hi, "");
  app->add_option("--env.damping-scale-lo", r.damping_scale_lo, "");
  app->add_option("--env.damping-scale-hi", r.damping_scale_hi, "");
  app->add_option("--env.push-torque", r.push_torque,
                  "external bias bound [N m]");
  app->add_option("--env.push-interval", r.push_interval_mean,
                  "mean seconds between bias resamples");

  app->add_option("--env.noise-pos", cfg.env.noise.pos,
                  "observation noise bound, angles [rad]");
  app->add_option("--env.noise-vel", cfg.env.noise.vel,
                  "observation noise bound, velocities [rad/s]");

  auto& t = cfg.env.task;
  app->add_option("--env.reach-scale", t.reach_scale, "");
  app->add_option("--env.track-scale", t.track_scale, "");
  app->add_option("--env.posture-scale", t.posture_scale, "");
  app->add_option("--env.w-torque", t.w_torque, "");
  app->add_option("--env.w-joint-vel", t.w_joint_vel, "");
  app->add_option("--env.w-joint-acc", t.w_joint_acc, "");
  app->add_option("--env.w-action-mag", t.w_action_mag, "");
  app->add_option("--env.w-action-smooth", t.w_action_smooth, "");
  app->add_option("--env.w-termination", t.w_termination, "");
}

void add_ppo_options(CLI::App* app, RunConfig& cfg) {
  auto& p = cfg.ppo;
  app->add_option("--ppo.clip-eps", p.clip_eps, "clip parameter");
  app->add_option("--ppo.gamma", p.gamma, "discount");
  app->add_option("--ppo.lam", p.lam, "GAE lambda");
  app->add_option("--ppo.c-vf", p.c_vf, "value loss coefficient");
  app->add_option("--ppo.c-ent", p.c_ent, "entropy coefficient");
  app->add_option("--ppo.g-max", p.g_max, "max gradient norm");
  app->add_option("--ppo.kl-target", p.kl_target, "desired KL");
  app->add_option("--ppo.lr-ratio", p.lr_ratio, "learning-rate adjust ratio");
  app->add_option("--ppo.lr0", p.lr0, "initial learning rate");
  app->add_option("--ppo.t-steps", p.t_steps, "steps per iteration");
  app->add_option("--ppo.epochs", p.epochs, "learning epochs per update");
  app->add_option("--ppo.minibatches", p.minibatches, "minibatches per epoch");
  app->add_option("--ppo.iters", p.iters, "training iterations");
  app->add_option("--ppo.symmetry-weight", p.symmetry_weight,
                  "mirror-symmetry loss weight (0 disables)");
  app->add_option("--ppo.num-envs", cfg.num_envs, "parallel environments");
}

void add_explore_options(CLI::App* app, RunConfig& cfg) {
  auto& e = cfg.explore;
  app->add_option("--explore.iters", e.iters, "max iterations");
  app->add_option("--explore.num-envs", e.num_envs, "parallel environments");
  app->add_option("--explore.min-buffer-windows", e.min_buffer_windows,
                  "minimum buffer size before actor updates");
  app->add_option("--explore.retrain-interval", e.retrain_interval,
                  "ensemble retrain interval [iterations]");
  app->add_option("--explore.c-ir", e.c_ir, "intrinsic reward scale");
  app->add_option("--explore.r-i-max", e.r_i_max,
                  "intrinsic reward clipping threshold");
  app->add_option("--explore.ensemble-size", e.ensemble.size, "");
  app->add_option("--explore.retrain-epochs", e.ensemble.retrain_epochs, "");
  app->add_option("--explore.ensemble-batch", e.ensemble.batch_size, "");
  app->add_option("--explore.ensemble-lr", e.ensemble.lr, "");
  app->add_option("--explore.single-member-error", e.single_member_error,
                  "ablation: single-member prediction-error reward");
}

void add_pidm_options(CLI::App* app, RunConfig& cfg) {
  auto& p = cfg.pretrain;
  app->add_option("--pidm.epochs", p.epochs, "training epochs");
  app->add_option("--pidm.batch-size", p.batch_size, "batch size");
  app->add_option("--pidm.lr", p.lr, "learning rate");
  app->add_option("--pidm.weight-decay", p.weight_decay, "AdamW weight decay");
  app->add_option("--pidm.val-fraction", p.val_fraction,
                  "episode-stratified validation fraction");
  app->add_option("--pidm.augment-symmetry", p.augment_symmetry, "");
  app->add_option("--pidm.augment-noise", p.augment_noise, "");
  app->add_option("--pidm.k-hist", p.shape.k_hist, "history timesteps");
  app->add_option("--pidm.eval-bins", cfg.eval_bins,
                  "action-magnitude bins for the error report");
}

void add_probe_options(CLI::App* app, RunConfig& cfg) {
  auto& p = cfg.probe;
  app->add_option("--probe.dataset-size", p.dataset_size, "");
  app->add_option("--probe.train-size", p.train_size, "");
  app->add_option("--probe.hidden", p.hidden, "probe hidden width");
  app->add_option("--probe.lr", p.lr, "");
  app->add_option("--probe.epochs", p.epochs, "");
  app->add_option("--probe.batch-size", p.batch_size, "");
  app->add_option("--probe.warmup-steps", p.warmup_steps,
                  "stochastic steps before each probe sample");
}

void add_common_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--seed", cfg.seed, "global seed");
  app->add_option("--out", cfg.out, "output directory");
  app->add_option("--task", cfg.task, "task id")
      ->check(CLI::IsMember({"reach", "track", "posture"}));
  app->add_option("--init", cfg.init_mode, "initialization mode")
      ->check(CLI::IsMember({"vanilla", "random-pidm", "pretrained-both",
                             "pretrained-actor-only",
                             "pretrained-critic-only"}));
  app->add_option("--pidm", cfg.pidm_ckpt, "pretrained checkpoint");
  app->add_option("--record-early", cfg.record_early,
                  "dump transitions from the first N iterations");
  app->add_option("--ckpt-count", cfg.ckpt_count,
                  "evenly spaced checkpoints");
}

std::vector<std::string> config_file_to_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw util::ConfigError("cannot open config file: " + path);
  std::vector<std::string> args;
  std::string line, section;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw util::ConfigError(path + ":" + std::to_string(lineno) +
                                ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw util::ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw util::ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key = value");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    for (auto& c : key)
      if (c == '_') c = '-';
    std::string name = section.empty() ? key : section + "." + key;
    for (auto& c : name)
      if (c == '_') c = '-';
    args.push_back("--" + name + "=" + value);
  }
  return args;
}

std::string resolve_out(const std::string& out, const std::string& leaf) {
  if (!out.empty()) return out;
  const char* root = std::getenv("PIDMRL_OUT_ROOT");
  if (!root || !*root)
    throw util::ConfigError(
        "no --out given and PIDMRL_OUT_ROOT is not set");
  return std::string(root) + "/" + leaf;
}

nlohmann::json env_config_to_json(const sim::EnvConfig& cfg) {
  return {
      {"arm",
       {{"l1", cfg.arm.l1},
        {"l2", cfg.arm.l2},
        {"m1", cfg.arm.m1},
        {"m2", cfg.arm.m2},
        {"gravity", cfg.arm.gravity},
        {"kp", cfg.arm.kp},
        {"kd", cfg.arm.kd},
        {"tau_max", cfg.arm.tau_max},
        {"damping", cfg.arm.damping},
        {"dt", cfg.arm.dt},
        {"substeps", cfg.arm.substeps},
        {"action_limit", cfg.arm.action_limit},
        {"velocity_limit", cfg.arm.velocity_limit},
        {"episode_steps", cfg.arm.episode_steps}}},
      {"randomization",
       {{"enabled", cfg.randomization.enabled},
        {"mass_scale_lo", cfg.randomization.mass_scale_lo},
        {"mass_scale_hi", cfg.randomization.mass_scale_hi},
        {"damping_scale_lo", cfg.randomization.damping_scale_lo},
        {"damping_scale_hi", cfg.randomization.damping_scale_hi},
        {"push_torque", cfg.randomization.push_torque},
        {"push_interval_mean", cfg.randomization.push_interval_mean}}},
      {"noise", {{"pos", cfg.noise.pos}, {"vel", cfg.noise.vel}}},
      {"task",
       {{"id", sim::task_name(cfg.task.id)},
        {"task_term_enabled", cfg.task.task_term_enabled},
        {"commands_enabled", cfg.task.commands_enabled},
        {"reach_scale", cfg.task.reach_scale},
        {"track_scale", cfg.task.track_scale},
        {"posture_scale", cfg.task.posture_scale},
        {"reach_radius_lo", cfg.task.reach_radius_lo},
        {"reach_radius_hi", cfg.task.reach_radius_hi},
        {"track_speed", cfg.task.track_speed},
        {"posture_range", cfg.task.posture_range},
        {"w_torque", cfg.task.w_torque},
        {"w_joint_vel", cfg.task.w_joint_vel},
        {"w_joint_acc", cfg.task.w_joint_acc},
        {"w_action_mag", cfg.task.w_action_mag},
        {"w_action_smooth", cfg.task.w_action_smooth},
        {"w_termination", cfg.task.w_termination}}},
      {"init_angle_range", cfg.init_angle_range},
  };
}

sim::EnvConfig env_config_from_json(const nlohmann::json& j) {
  sim::EnvConfig cfg;
  const auto& a = j.at("arm");
  cfg.arm.l1 = a.at("l1");
  cfg.arm.l2 = a.at("l2");
  cfg.arm.m1 = a.at("m1");
  cfg.arm.m2 = a.at("m2");
  cfg.arm.gravity = a.at("gravity");
  cfg.arm.kp = a.at("kp");
  cfg.arm.kd = a.at("kd");
  cfg.arm.tau_max = a.at("tau_max");
  cfg.arm.damping = a.at("damping");
  cfg.arm.dt = a.at("dt");
  cfg.arm.substeps = a.at("substeps");
  cfg.arm.action_limit = a.at("action_limit");
  cfg.arm.velocity_limit = a.at("velocity_limit");
  cfg.arm.episode_steps = a.at("episode_steps");
  const auto& r = j.at("randomization");
  cfg.randomization.enabled = r.at("enabled");
  cfg.randomization.mass_scale_lo = r.at("mass_scale_lo");
  cfg.randomization.mass_scale_hi = r.at("mass_scale_hi");
  cfg.randomization.damping_scale_lo = r.at("damping_scale_lo");
  cfg.randomization.damping_scale_hi = r.at("damping_scale_hi");
  cfg.randomization.push_torque = r.at("push_torque");
  cfg.randomization.push_interval_mean = r.at("push_interval_mean");
  cfg.noise.pos = j.at("noise").at("pos");
  cfg.noise.vel = j.at("noise").at("vel");
  const auto& t = j.at("task");
  cfg.task.id = sim::task_from_name(t.at("id"));
  cfg.task.task_term_enabled = t.at("task_term_enabled");
  cfg.task.commands_enabled = t.at("commands_enabled");
  cfg.task.reach_scale = t.at("reach_scale");
  cfg.task.track_scale = t.at("track_scale");
  cfg.task.posture_scale = t.at("posture_scale");
  cfg.task.reach_radius_lo = t.at("reach_radius_lo");
  cfg.task.reach_radius_hi = t.at("reach_radius_hi");
  cfg.task.track_speed = t.at("track_speed");
  cfg.task.posture_range = t.at("posture_range");
  cfg.task.w_torque = t.at("w_torque");
  cfg.task.w_joint_vel = t.at("w_joint_vel");
  cfg.task.w_joint_acc = t.at("w_joint_acc");
  cfg.task.w_action_mag = t.at("w_action_mag");
  cfg.task.w_action_smooth = t.at("w_action_smooth");
  cfg.task.w_termination = t.at("w_termination");
  cfg.init_angle_range = j.at("init_angle_range");
  return cfg;
}

}  // namespace pidmrl::cli
