#include "probe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nn/checkpoint.hpp"
#include "nn/optimizer.hpp"
#include "rl/ppo.hpp"
#include "util/csv.hpp"
#include "util/errors.hpp"

namespace pidmrl::probe {

ProbeData collect_probe_data(const policy::Net& actor,
                             std::span<const float> log_std,
                             sim::VecEnv& envs, int k_hist,
                             const ProbeConfig& cfg, util::Rng& rng) {
  ProbeData data;
  data.layer_names = actor.probe_layer_names();
  const int n_layers = static_cast<int>(data.layer_names.size());
  data.reps.resize(n_layers);
  data.targets.resize(cfg.dataset_size, 2);

  rl::RolloutCollector collector(envs, k_hist);
  auto cache = actor.make_cache();
  MatF obs, frames, ahist;
  std::vector<double> sigma(2);
  for (int d = 0; d < 2; ++d)
    sigma[d] = std::exp(static_cast<double>(log_std[d]));
  std::vector<sim::Vec2> actions(envs.size());
  std::vector<sim::StepOutput> outs;
  std::vector<MatF> reps_now;

  int collected = 0;
  while (collected < cfg.dataset_size) {
    // Stochastic warmup so states follow the policy's visitation measure.
    for (int t = 0; t < cfg.warmup_steps; ++t) {
      collector.fill_policy_inputs(obs, frames, ahist);
      policy::NetInput in{&obs, &frames, &ahist};
      const MatF& mu = actor.forward(in, *cache);
      for (int e = 0; e < envs.size(); ++e)
        actions[e] = {static_cast<double>(mu.at(e, 0)) + sigma[0] * rng.normal(),
                      static_cast<double>(mu.at(e, 1)) + sigma[1] * rng.normal()};
      envs.step(actions, outs);
      collector.advance_rings(outs);
    }

    // One deterministic mean-action step per environment.
    collector.fill_policy_inputs(obs, frames, ahist);
    policy::NetInput in{&obs, &frames, &ahist};
    actor.probe_forward(in, reps_now);
    const MatF& mu = actor.forward(in, *cache);
    for (int e = 0; e < envs.size(); ++e)
      actions[e] = {static_cast<double>(mu.at(e, 0)),
                    static_cast<double>(mu.at(e, 1))};
    envs.step(actions, outs);
    for (int e = 0; e < envs.size() && collected < cfg.dataset_size; ++e) {
      for (int l = 0; l < n_layers; ++l) {
        MatF& dst = data.reps[l];
        if (dst.rows != cfg.dataset_size)
          dst.resize(cfg.dataset_size, reps_now[l].cols);
        std::memcpy(dst.row(collected), reps_now[l].row(e),
                    sizeof(float) * static_cast<std::size_t>(dst.cols));
      }
      data.targets.at(collected, 0) = static_cast<float>(
          sim::wrap_diff(outs[e].x_tp1[0], outs[e].x_t[0]));
      data.targets.at(collected, 1) = static_cast<float>(
          sim::wrap_diff(outs[e].x_tp1[1], outs[e].x_t[1]));
      collected += 1;
    }
    collector.advance_rings(outs);
  }
  return data;
}

double zero_order_baseline(const MatF& targets) {
  if (targets.size() == 0) throw util::ConfigError("zero_order: empty");
  double acc = 0.0;
  for (const float v : targets.v) acc += std::abs(static_cast<double>(v));
  return acc / static_cast<double>(targets.size());
}

double fit_probe(const MatF& reps, const MatF& targets,
                 const ProbeConfig& cfg, std::uint64_t seed) {
  const int n = reps.rows;
  if (targets.rows != n || n <= cfg.train_size)
    throw util::ConfigError("fit_probe: need train and eval rows");
  util::Rng rng = util::Rng(seed).split(0x9704eULL);

  nn::MlpF net = nn::MlpF::he_init(
      nn::mlp_spec(reps.cols, {cfg.hidden}, targets.cols), rng);
  nn::Grads<float> grads = net.make_grads();
  nn::Cache<float> cache;
  nn::AdamOpt<float> opt({nn::OptKind::Adam, cfg.lr}, net.param_blobs());

  std::vector<int> idx(cfg.train_size);
  std::iota(idx.begin(), idx.end(), 0);
  MatF x, y, d;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(idx);
    for (int start = 0; start < cfg.train_size; start += cfg.batch_size) {
      const int m = std::min(cfg.batch_size, cfg.train_size - start);
      x.resize(m, reps.cols);
      y.resize(m, targets.cols);
      for (int i = 0; i < m; ++i) {
        std::memcpy(x.row(i), reps.row(idx[start + i]),
                    sizeof(float) * static_cast<std::size_t>(reps.cols));
        std::memcpy(y.row(i), targets.row(idx[start + i]),
                    sizeof(float) * static_cast<std::size_t>(targets.cols));
      }
      const MatF& pred = net.forward(x, cache);
      nn::l1_loss(pred, y, &d);
      grads.zero();
      net.backward(cache, d, grads);
      auto gb = grads.blobs();
      std::vector<std::span<const float>> cgb(gb.begin(), gb.end());
      opt.step(net.param_blobs(), cgb);
    }
  }

  const int n_eval = n - cfg.train_size;
  x.resize(n_eval, reps.cols);
  y.resize(n_eval, targets.cols);
  for (int i = 0; i < n_eval; ++i) {
    std::memcpy(x.row(i), reps.row(cfg.train_size + i),
                sizeof(float) * static_cast<std::size_t>(reps.cols));
    std::memcpy(y.row(i), targets.row(cfg.train_size + i),
                sizeof(float) * static_cast<std::size_t>(targets.cols));
  }
  const MatF& pred = net.forward(x, cache);
  return static_cast<double>(nn::l1_loss(pred, y));
}

ProbeGrid probe_matrix(const std::vector<std::string>& checkpoint_paths,
                       const sim::EnvConfig& env_cfg, int num_envs,
                       const ProbeConfig& cfg, std::uint64_t seed) {
  if (checkpoint_paths.size() < 2)
    throw util::ConfigError("probe_matrix: need at least 2 checkpoints");
  ProbeGrid grid;
  bool first = true;
  for (const auto& path : checkpoint_paths) {
    const auto ck = nn::Checkpoint::load(path);
    auto actor = rl::net_from_checkpoint(ck, "actor_");
    const auto log_std = ck.tensor("log_std");
    sim::VecEnv envs(env_cfg, num_envs, seed);
    util::Rng rng = util::Rng(seed).split(0xda7aULL);
    const int k_hist = ck.meta().value("k_hist", 4);
    ProbeData data =
        collect_probe_data(*actor, log_std, envs, k_hist, cfg, rng);
    if (first) {
      grid.layer_names = data.layer_names;
      grid.zero_order = zero_order_baseline(data.targets);
      first = false;
    }
    std::vector<double> row;
    for (std::size_t l = 0; l < data.reps.size(); ++l)
      row.push_back(fit_probe(data.reps[l], data.targets, cfg, seed));
    grid.errors.push_back(std::move(row));
    std::string name = path;
    const auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    grid.checkpoint_names.push_back(name);
  }
  return grid;
}

void write_grid_csv(const ProbeGrid& grid, const std::string& path) {
  std::vector<std::string> header = {"checkpoint"};
  for (const auto& l : grid.layer_names) header.push_back(l);
  util::CsvWriter csv(path, header);
  for (std::size_t r = 0; r < grid.checkpoint_names.size(); ++r) {
    std::vector<std::string> cells = {grid.checkpoint_names[r]};
    for (const double e : grid.errors[r])
      cells.push_back(util::format_double(e));
    csv.row(cells);
  }
  std::vector<std::string> zrow = {"zero_order"};
  for (std::size_t c = 0; c < grid.layer_names.size(); ++c)
    zrow.push_back(util::format_double(grid.zero_order));
  csv.row(zrow);
}

}  // namespace pidmrl::probe
