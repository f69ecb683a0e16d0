#pragma once

// Builds actor and critic networks for every initialization mode. Pretrained
// modes copy the history encoders and backbone out of a PIDM checkpoint; the
// intention encoder and action synthesizer are always freshly initialized.

#include <memory>
#include <optional>
#include <string>

#include "nn/checkpoint.hpp"
#include "policy/nets.hpp"

namespace pidmrl::policy {

enum class InitMode {
  PretrainedBoth,
  PretrainedActorOnly,
  PretrainedCriticOnly,
  RandomPidm,
  VanillaMlp,
};

InitMode init_mode_from_name(const std::string& name);
const char* init_mode_name(InitMode m);
bool init_mode_needs_checkpoint(InitMode m);

enum class Head { Actor, Critic };

struct AssembleConfig {
  int obs_dim = 8;
  int action_dim = 2;
  std::vector<int> vanilla_hidden = {128, 128, 128};
  std::vector<int> intention_hidden = {128, 128, 128};
  std::vector<int> synth_hidden = {128, 128, 128};
  double actor_head_scale = 0.01;  // keeps the initial action mean near zero
  pidm::PidmShape pidm_shape;      // used when no checkpoint provides one
};

// `ckpt` may be null for random_pidm / vanilla_mlp modes; pretrained modes
// require it and validate architecture compatibility against it.
std::unique_ptr<Net> assemble(InitMode mode, Head head,
                              const AssembleConfig& cfg,
                              const nn::Checkpoint* ckpt, std::uint64_t seed);

}  // namespace pidmrl::policy
