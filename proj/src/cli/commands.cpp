#include "cli/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "explore/explore.hpp"
#include "kernels/kernels.hpp"
#include "pidm/evaluate.hpp"
#include "pidm/pretrain.hpp"
#include "policy/assemble.hpp"
#include "probe/probe.hpp"
#include "rl/ppo.hpp"
#include "util/csv.hpp"
#include "util/errors.hpp"

namespace fs = std::filesystem;

namespace pidmrl::cli {

namespace {

void ensure_fresh_dir(const std::string& dir) {
  if (fs::exists(fs::path(dir) / "status.json") ||
      fs::exists(fs::path(dir) / "dataset.bin") ||
      fs::exists(fs::path(dir) / "pidm.ckpt"))
    throw util::ConfigError("refusing to overwrite existing run: " + dir);
  fs::create_directories(dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string fmt(double v) { return util::format_double(v); }

}  // namespace

std::string run_config_to_toml(const RunConfig& cfg) {
  std::ostringstream o;
  o << "# effective configuration (kernels: "
    << kern::isa_name(kern::active_isa()) << ")\n";
  o << "task = \"" << cfg.task << "\"\n";
  o << "init = \"" << cfg.init_mode << "\"\n";
  if (!cfg.pidm_ckpt.empty()) o << "pidm = \"" << cfg.pidm_ckpt << "\"\n";
  o << "seed = " << cfg.seed << "\n";
  o << "record_early = " << cfg.record_early << "\n";
  o << "ckpt_count = " << cfg.ckpt_count << "\n";
  const auto& a = cfg.env.arm;
  o << "\n[env]\n";
  o << "l1 = " << fmt(a.l1) << "\nl2 = " << fmt(a.l2) << "\n";
  o << "m1 = " << fmt(a.m1) << "\nm2 = " << fmt(a.m2) << "\n";
  o << "gravity = " << fmt(a.gravity) << "\n";
  o << "kp = " << fmt(a.kp) << "\nkd = " << fmt(a.kd) << "\n";
  o << "tau_max = " << fmt(a.tau_max) << "\n";
  o << "damping = " << fmt(a.damping) << "\n";
  o << "dt = " << fmt(a.dt) << "\nsubsteps = " << a.substeps << "\n";
  o << "episode_steps = " << a.episode_steps << "\n";
  o << "action_limit = " << fmt(a.action_limit) << "\n";
  o << "velocity_limit = " << fmt(a.velocity_limit) << "\n";
  o << "init_angle_range = " << fmt(cfg.env.init_angle_range) << "\n";
  o << "randomize = " << (cfg.env.randomization.enabled ? "true" : "false")
    << "\n";
  o << "noise_pos = " << fmt(cfg.env.noise.pos) << "\n";
  o << "noise_vel = " << fmt(cfg.env.noise.vel) << "\n";
  const auto& p = cfg.ppo;
  o << "\n[ppo]\n";
  o << "clip_eps = " << fmt(p.clip_eps) << "\ngamma = " << fmt(p.gamma)
    << "\nlam = " << fmt(p.lam) << "\n";
  o << "c_vf = " << fmt(p.c_vf) << "\nc_ent = " << fmt(p.c_ent) << "\n";
  o << "g_max = " << fmt(p.g_max) << "\n";
  o << "kl_target = " << fmt(p.kl_target) << "\nlr_ratio = " << fmt(p.lr_ratio)
    << "\nlr0 = " << fmt(p.lr0) << "\n";
  o << "t_steps = " << p.t_steps << "\nepochs = " << p.epochs
    << "\nminibatches = " << p.minibatches << "\niters = " << p.iters << "\n";
  o << "symmetry_weight = " << fmt(p.symmetry_weight) << "\n";
  o << "num_envs = " << cfg.num_envs << "\n";
  const auto& e = cfg.explore;
  o << "\n[explore]\n";
  o << "iters = " << e.iters << "\nnum_envs = " << e.num_envs << "\n";
  o << "min_buffer_windows = " << e.min_buffer_windows << "\n";
  o << "retrain_interval = " << e.retrain_interval << "\n";
  o << "c_ir = " << fmt(e.c_ir) << "\nr_i_max = " << fmt(e.r_i_max) << "\n";
  o << "ensemble_size = " << e.ensemble.size << "\n";
  o << "retrain_epochs = " << e.ensemble.retrain_epochs << "\n";
  o << "single_member_error = " << (e.single_member_error ? "true" : "false")
    << "\n";
  const auto& t = cfg.pretrain;
  o << "\n[pidm]\n";
  o << "epochs = " << t.epochs << "\nbatch_size = " << t.batch_size << "\n";
  o << "lr = " << fmt(t.lr) << "\nweight_decay = " << fmt(t.weight_decay)
    << "\n";
  o << "val_fraction = " << fmt(t.val_fraction) << "\n";
  o << "augment_symmetry = " << (t.augment_symmetry ? "true" : "false")
    << "\n";
  o << "augment_noise = " << (t.augment_noise ? "true" : "false") << "\n";
  o << "k_hist = " << t.shape.k_hist << "\n";
  o << "eval_bins = " << cfg.eval_bins << "\n";
  const auto& pr = cfg.probe;
  o << "\n[probe]\n";
  o << "dataset_size = " << pr.dataset_size << "\n";
  o << "train_size = " << pr.train_size << "\n";
  o << "hidden = " << pr.hidden << "\nlr = " << fmt(pr.lr) << "\n";
  o << "epochs = " << pr.epochs << "\nbatch_size = " << pr.batch_size << "\n";
  o << "warmup_steps = " << pr.warmup_steps << "\n";
  return o.str();
}

void cmd_explore(const RunConfig& cfg) {
  const std::string out = cfg.out;
  ensure_fresh_dir(out);
  write_text(out + "/config.toml", run_config_to_toml(cfg));

  sim::EnvConfig envc = cfg.make_env_config();
  explore::ExploreConfig xc = cfg.explore;
  xc.ppo = cfg.ppo;
  xc.ppo.iters = cfg.explore.iters;
  xc.shape.k_hist = cfg.pretrain.shape.k_hist;

  util::CsvWriter log(out + "/explore_log.csv",
                      {"iteration", "mean_intrinsic", "mean_extrinsic",
                       "buffer_size", "retrain_flag"});
  auto res = explore::collect_exploration_data(
      envc, xc, cfg.seed, [&](const explore::ExploreLogRow& row) {
        log.row({std::to_string(row.iteration), fmt(row.mean_intrinsic),
                 fmt(row.mean_extrinsic), std::to_string(row.buffer_windows),
                 row.retrained ? "1" : "0"});
      });
  log.flush();
  res.dataset.save(out + "/dataset.bin");

  nlohmann::json status = {{"status", "ok"},
                           {"kind", "explore"},
                           {"seed", cfg.seed},
                           {"transitions", res.dataset.size()},
                           {"retrains", res.retrains},
                           {"incomplete_windows", res.incomplete_windows}};
  write_text(out + "/status.json", status.dump(2) + "\n");
}

void cmd_pretrain(const RunConfig& cfg, const std::string& data_path,
                  const std::string& expected_source) {
  const std::string out = cfg.out;
  ensure_fresh_dir(out);
  write_text(out + "/config.toml", run_config_to_toml(cfg));

  sim::Dataset data = sim::Dataset::load(data_path);
  const auto& m = data.manifest;
  if (m.value("proprio_channels", nlohmann::json::array()) !=
      nlohmann::json({"q1", "q2", "qd1", "qd2"}))
    throw util::ConfigError("dataset channel layout mismatch");
  if (expected_source != "auto" &&
      m.value("source", std::string()) != expected_source)
    throw util::ConfigError("dataset source is '" +
                            m.value("source", std::string()) +
                            "', expected '" + expected_source + "'");

  pidm::PretrainConfig pc = cfg.pretrain;
  pc.noise = cfg.env.noise;
  pc.seed = cfg.seed;
  auto res = pidm::pretrain(data, pc);

  res.net.save(out + "/pidm.ckpt");
  {
    util::CsvWriter curve(out + "/pretrain_curve.csv",
                          {"epoch", "train_l1", "val_l1"});
    for (const auto& row : res.curve)
      curve.row({std::to_string(row.epoch), fmt(row.train_l1),
                 fmt(row.val_l1)});
  }

  // Binned validation-error report with the zero-order reference.
  const pidm::WindowSet ws = pidm::WindowSet::build(data, pc.shape.k_hist);
  pidm::MatF frames, actions, delta, label, q_now;
  pidm::fill_batch(data, ws, res.val_order, 0, res.val_order.size(), frames,
                   actions, delta, label, &q_now);
  util::Rng noise_rng = util::Rng(cfg.seed).split(0xeba1ULL);
  if (pc.augment_noise) pidm::add_frame_noise(frames, pc.noise, noise_rng);
  const auto ev = pidm::evaluate_actions(res.net, frames, actions, delta,
                                         label, q_now, cfg.eval_bins);
  {
    const std::vector<std::string> eval_header = {
        "bin_lo", "bin_hi", "count", "mean_abs_err", "mean_magnitude",
        "normalized_err", "zero_order_normalized", "low_sample"};
    util::CsvWriter ecsv(out + "/pidm_eval.csv", eval_header);
    for (const auto& b : ev.bins)
      ecsv.row({fmt(b.lo), fmt(b.hi), std::to_string(b.count),
                fmt(b.mean_abs_err), fmt(b.mean_magnitude), fmt(b.normalized),
                "1", b.low_sample ? "1" : "0"});
  }

  nlohmann::json status;
  status["status"] = "ok";
  status["kind"] = "pretrain";
  status["seed"] = cfg.seed;
  status["best_epoch"] = res.best_epoch;
  status["best_val_l1"] = res.best_val;
  status["train_windows"] = res.train_windows;
  status["val_windows"] = res.val_windows;
  status["overall_abs_err"] = ev.overall_abs_err;
  status["overall_normalized_err"] = ev.overall_normalized;
  write_text(out + "/status.json", status.dump(2) + "\n");
}

void cmd_train(const RunConfig& cfg) {
  const std::string out = cfg.out;
  ensure_fresh_dir(out);
  write_text(out + "/config.toml", run_config_to_toml(cfg));
  fs::create_directories(out + "/checkpoints");

  const auto mode = policy::init_mode_from_name(cfg.init_mode);
  std::optional<nn::Checkpoint> ckpt;
  if (!cfg.pidm_ckpt.empty()) ckpt = nn::Checkpoint::load(cfg.pidm_ckpt);
  if (policy::init_mode_needs_checkpoint(mode) && !ckpt)
    throw util::ConfigError("init mode " + cfg.init_mode +
                            " requires --pidm <checkpoint>");

  sim::EnvConfig envc = cfg.make_env_config();
  policy::AssembleConfig ac;
  ac.obs_dim = sim::kObsDim;
  ac.action_dim = sim::kActionDim;
  ac.pidm_shape = cfg.pretrain.shape;
  auto actor = policy::assemble(mode, policy::Head::Actor, ac,
                                ckpt ? &*ckpt : nullptr, cfg.seed);
  auto critic = policy::assemble(mode, policy::Head::Critic, ac,
                                 ckpt ? &*ckpt : nullptr, cfg.seed);

  const int k_hist = cfg.pretrain.shape.k_hist;
  std::vector<float> log_std0(sim::kActionDim, 0.0f);
  const auto astats =
      rl::initial_action_stats(*actor, log_std0, envc, k_hist, 10000,
                               cfg.seed);

  sim::VecEnv envs(envc, cfg.num_envs, cfg.seed);
  rl::PpoTrainer trainer(envs, std::move(actor), std::move(critic), cfg.ppo,
                         cfg.seed, k_hist);

  util::CsvWriter curve(
      out + "/curve.csv",
      {"iteration", "mean_reward", "reward_task", "reward_joint_torque",
       "reward_joint_vel", "reward_joint_acc", "reward_action_mag",
       "reward_action_smooth", "reward_termination", "kl", "lr", "sigma_mean",
       "seconds"});
  util::CsvWriter wlog(out + "/weight_updates.csv",
                       {"iteration", "submodule", "value"});

  sim::Dataset early;
  if (cfg.record_early > 0)
    early.manifest =
        sim::Dataset::make_manifest(envc, "rl-early", cfg.seed, k_hist);

  const int ckpt_interval =
      std::max(1, cfg.ppo.iters / std::max(1, cfg.ckpt_count));
  nlohmann::json meta = {{"task", cfg.task},
                         {"method", cfg.init_mode},
                         {"seed", cfg.seed},
                         {"k_hist", k_hist},
                         {"env", env_config_to_json(envc)}};

  std::string status_str = "ok";
  std::string error_msg;
  int completed = 0;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    for (int it = 0; it < cfg.ppo.iters; ++it) {
      const bool log_weights = it < cfg.weight_log_iters;
      std::unique_ptr<policy::Net> actor_before, critic_before;
      if (log_weights) {
        actor_before = trainer.actor().clone();
        critic_before = trainer.critic().clone();
      }

      rl::CollectOptions copt;
      copt.keep_transitions = cfg.record_early > 0 && it < cfg.record_early;
      rl::RolloutBatch& batch = trainer.collect(copt);
      if (copt.keep_transitions)
        for (int i = 0; i < batch.flat(); ++i)
          early.append(sim::make_record(batch.steps[i], i % batch.n_envs));

      const auto stats = trainer.update(batch, true);

      if (log_weights) {
        for (const auto& [name, value] :
             policy::submodule_deltas(*actor_before, trainer.actor()))
          wlog.row({std::to_string(it), "actor_" + name, fmt(value)});
        for (const auto& [name, value] :
             policy::submodule_deltas(*critic_before, trainer.critic()))
          wlog.row({std::to_string(it), "critic_" + name, fmt(value)});
      }

      const double inv = 1.0 / batch.flat();
      double mean_reward = 0.0;
      for (const double r : batch.rewards) mean_reward += r;
      mean_reward *= inv;
      const auto& ts = batch.reward_term_sums;
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      curve.row({std::to_string(it), fmt(mean_reward), fmt(ts.task * inv),
                 fmt(ts.joint_torque * inv), fmt(ts.joint_vel * inv),
                 fmt(ts.joint_acc * inv), fmt(ts.action_mag * inv),
                 fmt(ts.action_smooth * inv), fmt(ts.termination * inv),
                 fmt(stats.kl), fmt(stats.lr), fmt(stats.sigma_mean),
                 fmt(secs)});
      completed = it + 1;

      if ((it + 1) % ckpt_interval == 0 && (it + 1) < cfg.ppo.iters) {
        char name[64];
        std::snprintf(name, sizeof(name), "ckpt_%06d.ckpt", it + 1);
        trainer.save_policy(out + "/checkpoints/" + name, meta);
      }
    }
  } catch (const util::TrainingDivergence& e) {
    status_str = "failed";
    error_msg = e.what();
  }
  curve.flush();

  char name[64];
  std::snprintf(name, sizeof(name), "ckpt_%06d.ckpt", completed);
  trainer.save_policy(out + "/checkpoints/" + name, meta);
  trainer.save_policy(out + "/final.ckpt", meta);

  if (cfg.record_early > 0) early.save(out + "/early_dataset.bin");

  nlohmann::json status = {
      {"status", status_str},
      {"kind", "train"},
      {"task", cfg.task},
      {"method", cfg.init_mode},
      {"seed", cfg.seed},
      {"iters_completed", completed},
      {"action_check",
       {{"mean", {astats.mean[0], astats.mean[1]}},
        {"std", {astats.stddev[0], astats.stddev[1]}},
        {"pass", astats.pass}}},
      {"kernels", kern::isa_name(kern::active_isa())}};
  if (!error_msg.empty()) status["error"] = error_msg;
  write_text(out + "/status.json", status.dump(2) + "\n");
  if (status_str != "ok")
    std::cerr << "training diverged; partial logs preserved in " << out
              << "\n";
}

void cmd_probe(const RunConfig& cfg, const std::string& checkpoints_dir,
               const std::string& out_csv) {
  std::string dir = checkpoints_dir;
  if (fs::is_directory(fs::path(dir) / "checkpoints"))
    dir = (fs::path(dir) / "checkpoints").string();
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".ckpt")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.size() < 2)
    throw util::ConfigError("probe: need at least 2 checkpoints in " + dir);

  const auto first = nn::Checkpoint::load(paths.front());
  const sim::EnvConfig envc = env_config_from_json(first.meta().at("env"));
  const auto grid = probe::probe_matrix(paths, envc, 16, cfg.probe, cfg.seed);
  probe::write_grid_csv(grid, out_csv);
}

void cmd_bench(const BenchOptions& opt) {
  fs::create_directories(opt.out + "/runs");
  std::optional<nn::Checkpoint> ckpt;
  for (const auto& task : opt.tasks) {
    for (const auto& method : opt.methods) {
      if (policy::init_mode_needs_checkpoint(
              policy::init_mode_from_name(method)) &&
          opt.pidm_ckpt.empty())
        throw util::ConfigError("bench: method " + method +
                                " requires --pidm <checkpoint>");
      for (int s = 0; s < opt.seeds; ++s) {
        RunConfig rc = opt.base;
        rc.task = task;
        rc.init_mode = method;
        rc.pidm_ckpt = policy::init_mode_needs_checkpoint(
                           policy::init_mode_from_name(method))
                           ? opt.pidm_ckpt
                           : "";
        rc.seed = opt.base.seed + static_cast<std::uint64_t>(s);
        rc.out = opt.out + "/runs/" + task + "_" + method + "_s" +
                 std::to_string(s);
        cmd_train(rc);
      }
    }
  }
  report::ReportOptions ro;
  ro.runs_dir = opt.out + "/runs";
  ro.out_dir = opt.out + "/report";
  report::generate_report(ro);
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"exploration-pretrained inverse dynamics models warm-starting "
               "actor-critic reinforcement learning on a planar 2-link arm"};
  app.require_subcommand(1);

  RunConfig cfg_explore, cfg_pretrain, cfg_train, cfg_probe;
  BenchOptions bench;
  bench.base.ppo.iters = 250;
  bench.base.ppo.epochs = 4;
  bench.base.num_envs = 16;

  std::string data_path, data_source = "auto";
  std::string ckpt_dir, grid_out;
  report::ReportOptions ro;

  auto* ex = app.add_subcommand("explore",
                                "collect exploration data into a dataset");
  add_common_options(ex, cfg_explore);
  add_env_options(ex, cfg_explore);
  add_ppo_options(ex, cfg_explore);
  add_explore_options(ex, cfg_explore);
  add_pidm_options(ex, cfg_explore);

  auto* pre = app.add_subcommand("pretrain",
                                 "pretrain the inverse dynamics model");
  pre->add_option("--data", data_path, "transition dataset")->required();
  pre->add_option("--data-source", data_source,
                  "required dataset source tag")
      ->check(CLI::IsMember({"auto", "exploration", "rl-early"}));
  add_common_options(pre, cfg_pretrain);
  add_env_options(pre, cfg_pretrain);
  add_pidm_options(pre, cfg_pretrain);

  auto* tr = app.add_subcommand("train", "train a task policy");
  add_common_options(tr, cfg_train);
  add_env_options(tr, cfg_train);
  add_ppo_options(tr, cfg_train);
  add_pidm_options(tr, cfg_train);

  auto* pb = app.add_subcommand("probe",
                                "probe dynamics knowledge across checkpoints");
  pb->add_option("--checkpoints", ckpt_dir,
                 "run directory or checkpoints directory")
      ->required();
  pb->add_option("--out", grid_out, "output grid CSV")->required();
  pb->add_option("--seed", cfg_probe.seed, "probe seed");
  add_probe_options(pb, cfg_probe);

  auto* rp = app.add_subcommand("report", "aggregate runs into tables");
  rp->add_option("--runs", ro.runs_dir, "directory of run directories")
      ->required();
  rp->add_option("--out", ro.out_dir, "report output directory");
  rp->add_option("--baseline", ro.baseline_method, "baseline method");
  rp->add_option("--tail-window", ro.tail_window, "final-performance window");
  rp->add_option("--smooth-window", ro.smooth_window, "smoothing window");

  auto* bn = app.add_subcommand(
      "bench", "run the seed x method matrix and build the report");
  bn->add_option("--seeds", bench.seeds, "seeds per cell");
  bn->add_option("--tasks", bench.tasks, "tasks to run");
  bn->add_option("--methods", bench.methods, "methods to run");
  add_common_options(bn, bench.base);
  add_env_options(bn, bench.base);
  add_ppo_options(bn, bench.base);
  add_pidm_options(bn, bench.base);

  for (auto* sub : app.get_subcommands({}))
    for (auto* opt : sub->get_options())
      opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // Config files are spliced in right after the subcommand token, so any
  // explicit flags that follow override file values.
  std::vector<std::string> args;
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      config_path = argv[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      args.push_back(a);
    }
  }
  try {
    if (!config_path.empty()) {
      if (args.empty())
        throw util::ConfigError("--config requires a subcommand");
      const auto cfg_args = config_file_to_args(config_path);
      args.insert(args.begin() + 1, cfg_args.begin(), cfg_args.end());
    }
  } catch (const util::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  std::vector<const char*> cargv = {argv[0]};
  for (const auto& a : args) cargv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (ex->parsed()) {
      cfg_explore.out = resolve_out(
          cfg_explore.out, "explore_seed" + std::to_string(cfg_explore.seed));
      cmd_explore(cfg_explore);
    } else if (pre->parsed()) {
      cfg_pretrain.out = resolve_out(
          cfg_pretrain.out,
          "pretrain_seed" + std::to_string(cfg_pretrain.seed));
      cmd_pretrain(cfg_pretrain, data_path, data_source);
    } else if (tr->parsed()) {
      cfg_train.out = resolve_out(
          cfg_train.out, cfg_train.task + "_" + cfg_train.init_mode +
                             "_seed" + std::to_string(cfg_train.seed));
      cmd_train(cfg_train);
    } else if (pb->parsed()) {
      cmd_probe(cfg_probe, ckpt_dir, grid_out);
    } else if (rp->parsed()) {
      if (ro.out_dir.empty()) ro.out_dir = ro.runs_dir + "/../report";
      report::generate_report(ro);
    } else if (bn->parsed()) {
      bench.out = resolve_out(bench.base.out, "bench");
      bench.pidm_ckpt = bench.base.pidm_ckpt;
      cmd_bench(bench);
    }
  } catch (const util::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pidmrl::cli
