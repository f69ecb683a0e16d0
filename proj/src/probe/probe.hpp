#pragma once

// Dynamics-knowledge probing: states are reached with the stochastic policy,
// one deterministic mean-action step is executed and the resulting joint
// angle change recorded, and a deliberately lightweight regressor is fitted
// from each probed layer representation to that change. The probe budget is
// fixed across layers and checkpoints so errors are comparable.

#include <string>
#include <vector>

#include "policy/nets.hpp"
#include "rl/rollout.hpp"
#include "sim/env.hpp"
#include "util/rng.hpp"

namespace pidmrl::probe {

using MatF = nn::Mat<float>;

struct ProbeConfig {
  int dataset_size = 10000;
  int train_size = 9000;
  int hidden = 64;
  double lr = 1e-3;
  int epochs = 20;
  int batch_size = 256;
  int warmup_steps = 50;
  int n_bins_unused = 0;  // reserved
};

struct ProbeData {
  std::vector<std::string> layer_names;
  std::vector<MatF> reps;  // one (N x layer_dim) matrix per layer
  MatF targets;            // N x 2, joint-angle change [rad]
};

ProbeData collect_probe_data(const policy::Net& actor,
                             std::span<const float> log_std,
                             sim::VecEnv& envs, int k_hist,
                             const ProbeConfig& cfg, util::Rng& rng);

// Mean |dq| per element: the error of always predicting "no change".
double zero_order_baseline(const MatF& targets);

// Fits the lightweight regressor on the first train_size rows and returns
// the held-out mean absolute error per element.
double fit_probe(const MatF& reps, const MatF& targets,
                 const ProbeConfig& cfg, std::uint64_t seed);

struct ProbeGrid {
  std::vector<std::string> checkpoint_names;  // rows
  std::vector<std::string> layer_names;       // columns
  std::vector<std::vector<double>> errors;    // [row][col]
  double zero_order = 0.0;
};

// One probing pass per checkpoint over all probed layers of its actor.
ProbeGrid probe_matrix(const std::vector<std::string>& checkpoint_paths,
                       const sim::EnvConfig& env_cfg, int num_envs,
                       const ProbeConfig& cfg, std::uint64_t seed);

void write_grid_csv(const ProbeGrid& grid, const std::string& path);

}  // namespace pidmrl::probe
