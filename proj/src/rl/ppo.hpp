#pragma once

// Clipped-surrogate policy optimization with generalized advantage
// estimation, whole-batch advantage normalization, closed-form Gaussian
// entropy bonus, per-minibatch KL-driven learning-rate adaptation, global
// gradient clipping, and an optional mirror-symmetry loss on the action
// mean. Actor, log-std vector, and critic share one Adam optimizer.

#include <memory>
#include <string>
#include <vector>

#include "nn/optimizer.hpp"
#include "policy/nets.hpp"
#include "rl/rollout.hpp"
#include "sim/env.hpp"
#include "util/rng.hpp"

namespace pidmrl::rl {

struct PpoConfig {
  double clip_eps = 0.2;
  double gamma = 0.99;
  double lam = 0.95;
  double c_vf = 0.5;
  double c_ent = 0.005;
  double g_max = 1.0;
  double kl_target = 0.01;
  double lr_ratio = 1.5;
  double lr0 = 1e-3;
  int t_steps = 24;
  int epochs = 5;
  int minibatches = 4;
  int iters = 1500;
  double symmetry_weight = 0.2;

  void validate(int n_envs) const;
};

struct UpdateStats {
  double kl = 0.0;        // mean over minibatches
  double lr = 0.0;        // after the iteration
  double loss_clip = 0.0; // last minibatch
  double loss_vf = 0.0;
  double entropy = 0.0;
  double loss_sym = 0.0;
  double sigma_mean = 0.0;
};

class PpoTrainer {
 public:
  PpoTrainer(sim::VecEnv& envs, std::unique_ptr<policy::Net> actor,
             std::unique_ptr<policy::Net> critic, const PpoConfig& cfg,
             std::uint64_t seed, int k_hist);

  RolloutBatch& collect(const CollectOptions& opt = {});

  // Runs GAE + normalization + the epoch/minibatch loop on `batch`.
  // With update_actor == false only the critic learns: actor and log-std
  // gradients stay zero (their parameters are bit-unchanged under Adam) and
  // the learning rate is left alone.
  UpdateStats update(RolloutBatch& batch, bool update_actor = true);

  policy::Net& actor() { return *actor_; }
  const policy::Net& actor() const { return *actor_; }
  policy::Net& critic() { return *critic_; }
  std::span<const float> log_std() const { return log_std_; }
  double lr() const { return lr_; }
  RolloutCollector& collector() { return collector_; }
  util::Rng& rng() { return rng_; }
  const PpoConfig& config() const { return cfg_; }

  void save_policy(const std::string& path,
                   const nlohmann::json& extra_meta) const;

 private:
  sim::VecEnv* envs_;
  std::unique_ptr<policy::Net> actor_, critic_;
  std::vector<float> log_std_, d_log_std_;
  PpoConfig cfg_;
  double lr_;
  util::Rng rng_;
  RolloutCollector collector_;
  nn::AdamOpt<float> opt_;
  RolloutBatch batch_;

  std::unique_ptr<policy::NetCache> actor_cache_, mirror_cache_,
      critic_cache_;

  std::vector<std::span<float>> all_params();
  std::vector<std::span<float>> all_grads();
};

// Reconstructs a policy net saved with PpoTrainer::save_policy.
std::unique_ptr<policy::Net> net_from_checkpoint(const nn::Checkpoint& ck,
                                                 const std::string& prefix);

}  // namespace pidmrl::rl
