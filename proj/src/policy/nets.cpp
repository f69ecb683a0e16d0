#include "policy/nets.hpp"

#include <cstring>

#include "util/errors.hpp"

namespace pidmrl::policy {

std::vector<std::pair<std::string, double>> submodule_deltas(
    const Net& before, const Net& after) {
  const auto subs_b = before.submodules();
  const auto subs_a = after.submodules();
  if (subs_b.size() != subs_a.size())
    throw util::ConfigError("submodule_deltas: structure mismatch");
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t s = 0; s < subs_b.size(); ++s) {
    double acc = 0.0;
    int layers = 0;
    for (std::size_t m = 0; m < subs_b[s].nets.size(); ++m) {
      const auto deltas =
          nn::param_delta(*subs_b[s].nets[m], *subs_a[s].nets[m]);
      for (const double d : deltas) {
        acc += d;
        layers += 1;
      }
    }
    out.emplace_back(subs_b[s].name, layers ? acc / layers : 0.0);
  }
  return out;
}

VanillaNet::VanillaNet(int obs_dim, const std::vector<int>& hidden,
                       int out_dim, double head_scale, util::Rng& rng) {
  mlp_ = nn::MlpF::he_init(nn::mlp_spec(obs_dim, hidden, out_dim), rng,
                           head_scale);
  grads_ = mlp_.make_grads();
}

std::unique_ptr<NetCache> VanillaNet::make_cache() const {
  return std::make_unique<VanillaCache>();
}

const MatF& VanillaNet::forward(const NetInput& in, NetCache& cache) const {
  auto& c = static_cast<VanillaCache&>(cache);
  return mlp_.forward(*in.obs, c.c);
}

void VanillaNet::backward(NetCache& cache, const MatF& d_out) {
  auto& c = static_cast<VanillaCache&>(cache);
  mlp_.backward(c.c, d_out, grads_);
}

void VanillaNet::save_into(nn::CheckpointWriter& w,
                           const std::string& prefix) const {
  w.add_net(prefix + "mlp", mlp_);
}

void VanillaNet::load_from(const nn::Checkpoint& ck,
                           const std::string& prefix) {
  ck.load_net(prefix + "mlp", mlp_);
}

nlohmann::json VanillaNet::arch_meta() const {
  std::vector<int> hidden;
  const auto spec = mlp_.spec();
  for (std::size_t i = 0; i + 1 < spec.size(); ++i)
    hidden.push_back(spec[i].out);
  return {{"family", "vanilla"},
          {"obs_dim", mlp_.input_dim()},
          {"out_dim", mlp_.output_dim()},
          {"hidden", hidden}};
}

std::vector<std::string> VanillaNet::probe_layer_names() const {
  std::vector<std::string> names;
  for (int i = 0; i + 1 < mlp_.num_layers(); ++i)
    names.push_back("h" + std::to_string(i + 1));
  return names;
}

void VanillaNet::probe_forward(const NetInput& in,
                               std::vector<MatF>& reps) const {
  nn::Cache<float> c;
  mlp_.forward(*in.obs, c);
  reps.clear();
  for (int i = 0; i + 1 < mlp_.num_layers(); ++i)
    reps.push_back(c.acts[i + 1]);
}

PidmPolicyNet::PidmPolicyNet(const pidm::PidmShape& shape, int obs_dim,
                             int out_dim,
                             const std::vector<int>& intention_hidden,
                             const std::vector<int>& synth_hidden,
                             double head_scale, util::Rng& rng)
    : obs_dim_(obs_dim), out_dim_(out_dim), core_(shape, rng) {
  intention_ = nn::MlpF::he_init(
      nn::mlp_spec(obs_dim, intention_hidden, shape.embed, nn::Act::Elu), rng);
  synth_ = nn::MlpF::he_init(
      nn::mlp_spec(2 * shape.embed, synth_hidden, out_dim), rng, head_scale);
  core_grads_ = core_.make_grads();
  intent_grads_ = intention_.make_grads();
  synth_grads_ = synth_.make_grads();
}

std::unique_ptr<NetCache> PidmPolicyNet::make_cache() const {
  return std::make_unique<PidmPolicyCache>();
}

const MatF& PidmPolicyNet::forward(const NetInput& in,
                                   NetCache& cache) const {
  auto& c = static_cast<PidmPolicyCache&>(cache);
  const MatF& intent = intention_.forward(*in.obs, c.intent);
  const MatF& bbout = core_.forward(*in.frames, *in.actions, intent, c.core);
  const int n = bbout.rows;
  const int embed = core_.shape().embed;
  if (c.synth_in.rows != n || c.synth_in.cols != 2 * embed)
    c.synth_in.resize(n, 2 * embed);
  for (int i = 0; i < n; ++i) {
    std::memcpy(c.synth_in.row(i), bbout.row(i),
                sizeof(float) * static_cast<std::size_t>(embed));
    std::memcpy(c.synth_in.row(i) + embed, intent.row(i),
                sizeof(float) * static_cast<std::size_t>(embed));
  }
  return synth_.forward(c.synth_in, c.synth);
}

const MatF& PidmPolicyNet::forward_with_intent(const NetInput& in,
                                               const MatF& intent,
                                               NetCache& cache) const {
  auto& c = static_cast<PidmPolicyCache&>(cache);
  return core_.forward(*in.frames, *in.actions, intent, c.core);
}

void PidmPolicyNet::backward(NetCache& cache, const MatF& d_out) {
  auto& c = static_cast<PidmPolicyCache&>(cache);
  const int embed = core_.shape().embed;
  synth_.backward(c.synth, d_out, synth_grads_, &c.d_synth_in);
  const int n = c.d_synth_in.rows;
  if (c.d_bbout.rows != n || c.d_bbout.cols != embed)
    c.d_bbout.resize(n, embed);
  if (c.d_intent_total.rows != n || c.d_intent_total.cols != embed)
    c.d_intent_total.resize(n, embed);
  for (int i = 0; i < n; ++i) {
    std::memcpy(c.d_bbout.row(i), c.d_synth_in.row(i),
                sizeof(float) * static_cast<std::size_t>(embed));
    std::memcpy(c.d_intent_total.row(i), c.d_synth_in.row(i) + embed,
                sizeof(float) * static_cast<std::size_t>(embed));
  }
  core_.backward(c.core, c.d_bbout, core_grads_, c.d_intent_slot);
  for (std::size_t i = 0; i < c.d_intent_total.size(); ++i)
    c.d_intent_total.v[i] += c.d_intent_slot.v[i];
  intention_.backward(c.intent, c.d_intent_total, intent_grads_);
}

void PidmPolicyNet::zero_grads() {
  core_grads_.zero();
  intent_grads_.zero();
  synth_grads_.zero();
}

std::vector<std::span<float>> PidmPolicyNet::param_blobs() {
  auto out = core_.param_blobs();
  for (auto& b : intention_.param_blobs()) out.push_back(b);
  for (auto& b : synth_.param_blobs()) out.push_back(b);
  return out;
}

std::vector<std::span<float>> PidmPolicyNet::grad_blobs() {
  std::vector<std::span<float>> out;
  for (auto& b : core_grads_.proprio.blobs()) out.push_back(b);
  for (auto& b : core_grads_.action.blobs()) out.push_back(b);
  for (auto& b : core_grads_.backbone.blobs()) out.push_back(b);
  for (auto& b : intent_grads_.blobs()) out.push_back(b);
  for (auto& b : synth_grads_.blobs()) out.push_back(b);
  return out;
}

std::vector<Submodule> PidmPolicyNet::submodules() const {
  return {{"history_encoders", {&core_.proprio_encoder, &core_.action_encoder}},
          {"backbone", {&core_.backbone}},
          {"intention_encoder", {&intention_}},
          {"synthesizer", {&synth_}}};
}

void PidmPolicyNet::save_into(nn::CheckpointWriter& w,
                              const std::string& prefix) const {
  w.add_net(prefix + "proprio_encoder", core_.proprio_encoder);
  w.add_net(prefix + "action_encoder", core_.action_encoder);
  w.add_net(prefix + "backbone", core_.backbone);
  w.add_net(prefix + "intention_encoder", intention_);
  w.add_net(prefix + "synthesizer", synth_);
}

void PidmPolicyNet::load_from(const nn::Checkpoint& ck,
                              const std::string& prefix) {
  ck.load_net(prefix + "proprio_encoder", core_.proprio_encoder);
  ck.load_net(prefix + "action_encoder", core_.action_encoder);
  ck.load_net(prefix + "backbone", core_.backbone);
  ck.load_net(prefix + "intention_encoder", intention_);
  ck.load_net(prefix + "synthesizer", synth_);
}

nlohmann::json PidmPolicyNet::arch_meta() const {
  const auto& s = core_.shape();
  return {{"family", "pidm"},
          {"obs_dim", obs_dim_},
          {"out_dim", out_dim_},
          {"k_hist", s.k_hist},
          {"embed", s.embed}};
}

std::vector<std::string> PidmPolicyNet::probe_layer_names() const {
  std::vector<std::string> names = {"synth_input"};
  for (int i = 0; i + 1 < synth_.num_layers(); ++i)
    names.push_back("synth_h" + std::to_string(i + 1));
  return names;
}

void PidmPolicyNet::probe_forward(const NetInput& in,
                                  std::vector<MatF>& reps) const {
  PidmPolicyCache c;
  forward(in, c);
  reps.clear();
  reps.push_back(c.synth_in);
  for (int i = 0; i + 1 < synth_.num_layers(); ++i)
    reps.push_back(c.synth.acts[i + 1]);
}

}  // namespace pidmrl::policy
