#include "explore/explore.hpp"

#include <algorithm>
#include <cmath>

#include "policy/nets.hpp"
#include "util/errors.hpp"

namespace pidmrl::explore {

namespace {

std::uint64_t fnv1a_params(policy::Net& net) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& blob : net.param_blobs()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    for (std::size_t i = 0; i < blob.size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

// Window index that grows as transitions stream in; produces the same
// chains as pidm::WindowSet::build over the final dataset.
class IncrementalWindows {
 public:
  IncrementalWindows(int k_hist, int num_envs)
      : k_(k_hist), per_env_(num_envs) {}

  void append(const sim::Dataset& data, std::uint32_t rec_idx) {
    const auto& rec = data.records[rec_idx];
    auto& seq = per_env_[static_cast<int>(rec.env_id)];
    seq.push_back(rec_idx);
    const std::size_t p = seq.size() - 1;
    if (p < static_cast<std::size_t>(k_)) return;
    for (int j = 1; j <= k_; ++j)
      if (data.records[seq[p - j]].episode_id != rec.episode_id) return;
    std::vector<std::uint32_t> chain(k_ + 1);
    for (int j = 0; j <= k_; ++j) chain[j] = seq[p - k_ + j];
    chains_.push_back(std::move(chain));
  }

  std::size_t size() const { return chains_.size(); }

  pidm::WindowSet as_window_set() const {
    pidm::WindowSet ws;
    ws.k_hist = k_;
    ws.chains = chains_;
    return ws;
  }

 private:
  int k_;
  std::vector<std::vector<std::uint32_t>> per_env_;
  std::vector<std::vector<std::uint32_t>> chains_;
};

}  // namespace

ExploreResult collect_exploration_data(
    const sim::EnvConfig& env_cfg, const ExploreConfig& cfg,
    std::uint64_t seed,
    const std::function<void(const ExploreLogRow&)>& on_iteration) {
  sim::EnvConfig ecfg = env_cfg;
  ecfg.task.task_term_enabled = false;
  ecfg.task.commands_enabled = false;

  sim::VecEnv envs(ecfg, cfg.num_envs, seed);
  util::Rng root(seed);
  util::Rng ens_rng = root.split(0xe25eedULL);

  ExploreResult res;
  res.dataset.manifest =
      sim::Dataset::make_manifest(ecfg, "exploration", seed, cfg.shape.k_hist);

  util::Rng actor_rng = root.split(1);
  util::Rng critic_rng = root.split(2);
  auto actor_net = std::make_unique<policy::VanillaNet>(
      sim::kObsDim, cfg.policy_hidden, sim::kActionDim, 0.01, actor_rng);
  auto critic_net = std::make_unique<policy::VanillaNet>(
      sim::kObsDim, cfg.policy_hidden, 1, 1.0, critic_rng);

  rl::PpoTrainer trainer(envs, std::move(actor_net), std::move(critic_net),
                         cfg.ppo, seed, cfg.shape.k_hist);
  Ensemble ensemble(cfg.shape, cfg.ensemble, seed);
  IncrementalWindows windows(cfg.shape.k_hist, cfg.num_envs);

  rl::CollectOptions copt;
  copt.keep_transitions = true;
  copt.keep_clean_windows = true;

  std::vector<double> sigma;
  res.dataset.records.reserve(static_cast<std::size_t>(cfg.iters) *
                              cfg.ppo.t_steps * cfg.num_envs);

  for (int iter = 0; iter < cfg.iters; ++iter) {
    rl::RolloutBatch& batch = trainer.collect(copt);

    for (int i = 0; i < batch.flat(); ++i) {
      const int e = i % batch.n_envs;
      res.dataset.append(sim::make_record(batch.steps[i], e));
      windows.append(res.dataset,
                     static_cast<std::uint32_t>(res.dataset.size() - 1));
    }

    const bool buffer_ready = windows.size() >= cfg.min_buffer_windows;
    bool retrained = false;
    if (buffer_ready && iter % cfg.retrain_interval == 0) {
      const pidm::WindowSet ws = windows.as_window_set();
      std::vector<std::uint32_t> all(ws.size());
      for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = static_cast<std::uint32_t>(i);
      ens_rng.shuffle(all);
      all.resize(cfg.min_buffer_windows);
      ensemble.train(res.dataset, ws, all, ens_rng);
      retrained = true;
      res.retrains += 1;
    }

    double sum_extr = 0.0, sum_intr = 0.0;
    for (int i = 0; i < batch.flat(); ++i) sum_extr += batch.rewards[i];

    if (buffer_ready && ensemble.trained()) {
      if (cfg.single_member_error) {
        pidm::PidmCache cache;
        const MatF& pred = ensemble.member(0).forward(
            batch.clean_frames, batch.actions_hist, batch.clean_delta, cache);
        sigma.assign(batch.flat(), 0.0);
        for (int i = 0; i < batch.flat(); ++i) {
          double acc = 0.0;
          for (int d = 0; d < batch.act_dim; ++d)
            acc += std::abs(static_cast<double>(pred.at(i, d)) -
                            batch.steps[i].action[d]);
          sigma[i] = acc / batch.act_dim;
        }
      } else {
        ensemble.disagreement(batch.clean_frames, batch.actions_hist,
                              batch.clean_delta, sigma);
      }
      for (int i = 0; i < batch.flat(); ++i) {
        if (!batch.window_complete[i]) {
          res.incomplete_windows += 1;
          continue;
        }
        const double ri = intrinsic_from_sigma(sigma[i], cfg.c_ir,
                                               cfg.r_i_max);
        batch.rewards[i] += ri;
        sum_intr += ri;
      }
    }

    trainer.update(batch, /*update_actor=*/buffer_ready);

    ExploreLogRow row;
    row.iteration = iter;
    row.mean_intrinsic = sum_intr / batch.flat();
    row.mean_extrinsic = sum_extr / batch.flat();
    row.buffer_windows = windows.size();
    row.retrained = retrained;
    row.actor_updated = buffer_ready;
    row.actor_param_hash = fnv1a_params(trainer.actor());
    res.log.push_back(row);
    if (on_iteration) on_iteration(row);
  }

  res.dataset.manifest["incomplete_windows"] = res.incomplete_windows;
  return res;
}

}  // namespace pidmrl::explore
