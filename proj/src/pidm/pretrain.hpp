#pragma once

// Supervised pretraining of the inverse dynamics model on a transition
// dataset: L1 loss on the recorded action, AdamW, per-batch mirror and noise
// augmentation, episode-stratified validation split, best-checkpoint
// selection by validation error.

#include <string>
#include <vector>

#include "pidm/pidm_net.hpp"
#include "pidm/window.hpp"
#include "sim/dataset.hpp"

namespace pidmrl::pidm {

struct PretrainConfig {
  int epochs = 260;
  int batch_size = 1024;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double val_fraction = 0.2;
  bool augment_symmetry = true;
  bool augment_noise = true;
  sim::NoiseConfig noise;  // matches the rollout observation noise
  std::uint64_t seed = 0;
  PidmShape shape;
  int log_every = 1;
};

struct EpochRow {
  int epoch = 0;
  double train_l1 = 0.0;
  double val_l1 = 0.0;
};

struct PretrainResult {
  PidmNet net;  // best-validation parameters
  std::vector<EpochRow> curve;
  int best_epoch = -1;
  double best_val = 0.0;
  std::size_t train_windows = 0, val_windows = 0;
  // Validation window indices into the window set (for later evaluation).
  std::vector<std::uint32_t> val_order;
};

// Splits whole episodes into train/validation so windows never leak across
// the split.
void split_by_episode(const sim::Dataset& data, const WindowSet& ws,
                      double val_fraction, util::Rng& rng,
                      std::vector<std::uint32_t>& train_order,
                      std::vector<std::uint32_t>& val_order);

PretrainResult pretrain(const sim::Dataset& data, const PretrainConfig& cfg);

}  // namespace pidmrl::pidm
