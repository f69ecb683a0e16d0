#pragma once

// Actor/critic network zoo behind one batched interface. Two families:
// a plain MLP on the task observation, and the history-backbone network
// where a randomly initialized intention encoder fills the slot the delta
// encoder used during pretraining and an action synthesizer reads the
// concatenated backbone output and intention embedding.

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "nn/checkpoint.hpp"
#include "nn/mlp.hpp"
#include "pidm/pidm_net.hpp"
#include "util/rng.hpp"

namespace pidmrl::policy {

using MatF = nn::Mat<float>;

struct NetInput {
  const MatF* obs = nullptr;      // n x obs_dim
  const MatF* frames = nullptr;   // n x (k*proprio_dim), noisy history
  const MatF* actions = nullptr;  // n x (k*action_dim)
};

struct NetCache {
  virtual ~NetCache() = default;
};

struct VanillaCache : NetCache {
  nn::Cache<float> c;
};

struct PidmPolicyCache : NetCache {
  nn::Cache<float> intent, synth;
  pidm::HistoryCoreCache core;
  MatF synth_in;  // n x 2*embed
  MatF d_synth_in, d_intent_total, d_bbout, d_intent_slot;
};

// One named pretrain/adapt unit; layer deltas are averaged per submodule for
// the weight-update reports.
struct Submodule {
  std::string name;
  std::vector<const nn::MlpF*> nets;
};

class Net {
 public:
  virtual ~Net() = default;

  virtual int obs_dim() const = 0;
  virtual int out_dim() const = 0;
  virtual bool uses_history() const = 0;

  virtual std::unique_ptr<NetCache> make_cache() const = 0;
  virtual const MatF& forward(const NetInput& in, NetCache& cache) const = 0;
  // Accumulates into the net's internal gradient buffers.
  virtual void backward(NetCache& cache, const MatF& d_out) = 0;

  virtual void zero_grads() = 0;
  virtual std::vector<std::span<float>> param_blobs() = 0;
  virtual std::vector<std::span<float>> grad_blobs() = 0;

  virtual std::vector<Submodule> submodules() const = 0;
  virtual std::unique_ptr<Net> clone() const = 0;

  virtual void save_into(nn::CheckpointWriter& w,
                         const std::string& prefix) const = 0;
  virtual void load_from(const nn::Checkpoint& ck,
                         const std::string& prefix) = 0;
  virtual nlohmann::json arch_meta() const = 0;

  // Post-activation representations probed by the dynamics-knowledge
  // analysis, shallow to deep.
  virtual std::vector<std::string> probe_layer_names() const = 0;
  virtual void probe_forward(const NetInput& in,
                             std::vector<MatF>& reps) const = 0;

  std::size_t param_count() {
    std::size_t n = 0;
    for (const auto& b : param_blobs()) n += b.size();
    return n;
  }
};

// Mean |delta| per parameter, averaged per layer and then per submodule.
std::vector<std::pair<std::string, double>> submodule_deltas(
    const Net& before, const Net& after);

class VanillaNet : public Net {
 public:
  VanillaNet(int obs_dim, const std::vector<int>& hidden, int out_dim,
             double head_scale, util::Rng& rng);

  int obs_dim() const override { return mlp_.input_dim(); }
  int out_dim() const override { return mlp_.output_dim(); }
  bool uses_history() const override { return false; }

  std::unique_ptr<NetCache> make_cache() const override;
  const MatF& forward(const NetInput& in, NetCache& cache) const override;
  void backward(NetCache& cache, const MatF& d_out) override;

  void zero_grads() override { grads_.zero(); }
  std::vector<std::span<float>> param_blobs() override {
    return mlp_.param_blobs();
  }
  std::vector<std::span<float>> grad_blobs() override { return grads_.blobs(); }

  std::vector<Submodule> submodules() const override {
    return {{"mlp", {&mlp_}}};
  }
  std::unique_ptr<Net> clone() const override {
    return std::make_unique<VanillaNet>(*this);
  }

  void save_into(nn::CheckpointWriter& w,
                 const std::string& prefix) const override;
  void load_from(const nn::Checkpoint& ck, const std::string& prefix) override;
  nlohmann::json arch_meta() const override;

  std::vector<std::string> probe_layer_names() const override;
  void probe_forward(const NetInput& in,
                     std::vector<MatF>& reps) const override;

  const nn::MlpF& mlp() const { return mlp_; }

 private:
  nn::MlpF mlp_;
  nn::Grads<float> grads_;
};

class PidmPolicyNet : public Net {
 public:
  // Builds everything randomly; pretrained parts are loaded afterwards.
  PidmPolicyNet(const pidm::PidmShape& shape, int obs_dim, int out_dim,
                const std::vector<int>& intention_hidden,
                const std::vector<int>& synth_hidden, double head_scale,
                util::Rng& rng);

  int obs_dim() const override { return obs_dim_; }
  int out_dim() const override { return out_dim_; }
  bool uses_history() const override { return true; }

  std::unique_ptr<NetCache> make_cache() const override;
  const MatF& forward(const NetInput& in, NetCache& cache) const override;
  void backward(NetCache& cache, const MatF& d_out) override;

  void zero_grads() override;
  std::vector<std::span<float>> param_blobs() override;
  std::vector<std::span<float>> grad_blobs() override;

  std::vector<Submodule> submodules() const override;
  std::unique_ptr<Net> clone() const override {
    return std::make_unique<PidmPolicyNet>(*this);
  }

  void save_into(nn::CheckpointWriter& w,
                 const std::string& prefix) const override;
  void load_from(const nn::Checkpoint& ck, const std::string& prefix) override;
  nlohmann::json arch_meta() const override;

  std::vector<std::string> probe_layer_names() const override;
  void probe_forward(const NetInput& in,
                     std::vector<MatF>& reps) const override;

  // Test hook: run with the final backbone slot forced to `intent` instead
  // of the intention-encoder output. Returns the backbone output; the cache
  // then exposes backbone activations for comparison against pretraining.
  const MatF& forward_with_intent(const NetInput& in, const MatF& intent,
                                  NetCache& cache) const;

  pidm::HistoryCore& core() { return core_; }
  const pidm::HistoryCore& core() const { return core_; }
  nn::MlpF& intention_encoder() { return intention_; }
  nn::MlpF& synthesizer() { return synth_; }

 private:
  int obs_dim_ = 0;
  int out_dim_ = 0;
  pidm::HistoryCore core_;
  nn::MlpF intention_, synth_;
  pidm::HistoryCoreGrads core_grads_;
  nn::Grads<float> intent_grads_, synth_grads_;
};

}  // namespace pidmrl::policy
