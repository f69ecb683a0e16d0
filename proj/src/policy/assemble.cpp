#include "policy/assemble.hpp"

#include "util/errors.hpp"

namespace pidmrl::policy {

InitMode init_mode_from_name(const std::string& name) {
  if (name == "pretrained-both") return InitMode::PretrainedBoth;
  if (name == "pretrained-actor-only") return InitMode::PretrainedActorOnly;
  if (name == "pretrained-critic-only") return InitMode::PretrainedCriticOnly;
  if (name == "random-pidm") return InitMode::RandomPidm;
  if (name == "vanilla") return InitMode::VanillaMlp;
  throw util::ConfigError("unknown init mode: " + name);
}

const char* init_mode_name(InitMode m) {
  switch (m) {
    case InitMode::PretrainedBoth: return "pretrained-both";
    case InitMode::PretrainedActorOnly: return "pretrained-actor-only";
    case InitMode::PretrainedCriticOnly: return "pretrained-critic-only";
    case InitMode::RandomPidm: return "random-pidm";
    default: return "vanilla";
  }
}

bool init_mode_needs_checkpoint(InitMode m) {
  return m == InitMode::PretrainedBoth || m == InitMode::PretrainedActorOnly ||
         m == InitMode::PretrainedCriticOnly;
}

std::unique_ptr<Net> assemble(InitMode mode, Head head,
                              const AssembleConfig& cfg,
                              const nn::Checkpoint* ckpt, std::uint64_t seed) {
  // Separate streams per head so actor and critic random parts differ.
  util::Rng rng =
      util::Rng(seed).split(head == Head::Actor ? 0xac707ULL : 0xc817cULL);
  const int out_dim = head == Head::Actor ? cfg.action_dim : 1;
  const double head_scale = head == Head::Actor ? cfg.actor_head_scale : 1.0;

  if (mode == InitMode::VanillaMlp)
    return std::make_unique<VanillaNet>(cfg.obs_dim, cfg.vanilla_hidden,
                                        out_dim, head_scale, rng);

  const bool load_pretrained =
      (head == Head::Actor && (mode == InitMode::PretrainedBoth ||
                               mode == InitMode::PretrainedActorOnly)) ||
      (head == Head::Critic && (mode == InitMode::PretrainedBoth ||
                                mode == InitMode::PretrainedCriticOnly));

  if (init_mode_needs_checkpoint(mode) && !ckpt)
    throw util::ConfigError(std::string("init mode ") + init_mode_name(mode) +
                            " requires a pretrained checkpoint");

  pidm::PidmShape shape = cfg.pidm_shape;
  if (ckpt) shape = pidm::PidmNet::shape_from_checkpoint(*ckpt);

  auto net = std::make_unique<PidmPolicyNet>(shape, cfg.obs_dim, out_dim,
                                             cfg.intention_hidden,
                                             cfg.synth_hidden, head_scale, rng);
  if (load_pretrained) net->core().load_from(*ckpt);
  return net;
}

}  // namespace pidmrl::policy
