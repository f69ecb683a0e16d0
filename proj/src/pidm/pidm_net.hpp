#pragma once

// Modular inverse dynamics model. Per-timestep encoders with shared weights
// embed each proprioception frame and each past action; the embeddings,
// ordered oldest-to-newest (proprio block, then action block), plus one
// extra embedding (delta target during pretraining, task intention inside
// policy networks) are concatenated into the backbone. A decoder with a
// sigmoid head bounded to the joint-target range emits the action.

#include <string>
#include <vector>

#include "nn/checkpoint.hpp"
#include "nn/mlp.hpp"
#include "util/rng.hpp"

namespace pidmrl::pidm {

using nn::Mat;
using MatF = nn::Mat<float>;

struct PidmShape {
  int k_hist = 4;
  int proprio_dim = 4;
  int action_dim = 2;
  int embed = 128;
  std::vector<int> encoder_hidden = {128};
  std::vector<int> backbone_hidden = {512, 256, 128};
  std::vector<int> decoder_hidden = {128};
  double out_limit = 2.5;  // [rad]

  int backbone_in() const { return (2 * k_hist + 1) * embed; }
  int frames_cols() const { return k_hist * proprio_dim; }
  int actions_cols() const { return k_hist * action_dim; }
};

struct HistoryCoreCache {
  nn::Cache<float> penc, aenc, bb;
  MatF pframes, aframes;       // (n*k) x dim, gathered per timestep
  MatF backbone_in;            // n x (2k+1)*embed
  MatF d_backbone_in, d_pemb, d_aemb;
  int n = 0;
};

struct HistoryCoreGrads {
  nn::Grads<float> proprio, action, backbone;
  void zero() {
    proprio.zero();
    action.zero();
    backbone.zero();
  }
};

// The pretrainable part shared between the PIDM and the policy networks.
class HistoryCore {
 public:
  HistoryCore() = default;
  HistoryCore(const PidmShape& shape, util::Rng& rng);

  const PidmShape& shape() const { return shape_; }

  // frames: n x (k*proprio_dim), actions: n x (k*action_dim),
  // extra: n x embed (occupies the final backbone slot).
  const MatF& forward(const MatF& frames, const MatF& actions,
                      const MatF& extra, HistoryCoreCache& c) const;

  // d_extra receives the gradient for the extra embedding slot.
  void backward(HistoryCoreCache& c, const MatF& d_out, HistoryCoreGrads& g,
                MatF& d_extra) const;

  HistoryCoreGrads make_grads() const;
  std::vector<std::span<float>> param_blobs();

  nn::MlpF proprio_encoder, action_encoder, backbone;

  void save_into(nn::CheckpointWriter& w) const;
  void load_from(const nn::Checkpoint& ck);

 private:
  PidmShape shape_;
};

struct PidmCache {
  HistoryCoreCache core;
  nn::Cache<float> denc, dec;
  MatF d_extra, d_bbout;
};

struct PidmGrads {
  HistoryCoreGrads core;
  nn::Grads<float> delta, decoder;
  void zero() {
    core.zero();
    delta.zero();
    decoder.zero();
  }
};

class PidmNet {
 public:
  PidmNet() = default;
  PidmNet(const PidmShape& shape, util::Rng& rng);

  const PidmShape& shape() const { return core_.shape(); }
  HistoryCore& core() { return core_; }
  const HistoryCore& core() const { return core_; }

  // delta: n x proprio_dim (wrap-aware on angle channels, built by caller).
  // Returns n x action_dim, every entry in [-out_limit, out_limit].
  const MatF& forward(const MatF& frames, const MatF& actions,
                      const MatF& delta, PidmCache& c) const;

  void backward(PidmCache& c, const MatF& d_out, PidmGrads& g) const;

  PidmGrads make_grads() const;
  std::vector<std::span<float>> param_blobs();
  std::size_t param_count() const;

  void save(const std::string& path) const;
  static PidmNet load(const std::string& path);
  static PidmShape shape_from_checkpoint(const nn::Checkpoint& ck);

  nn::MlpF delta_encoder, decoder;

 private:
  HistoryCore core_;
};

}  // namespace pidmrl::pidm
