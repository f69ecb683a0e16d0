#include "pidm/pidm_net.hpp"

#include <cstring>

#include "util/errors.hpp"

namespace pidmrl::pidm {

namespace {

// Gather per-timestep slices of a (n x k*dim) history matrix into a
// (n*k x dim) batch so one encoder pass covers every timestep.
void gather_timesteps(const MatF& hist, int k, int dim, MatF& out) {
  const int n = hist.rows;
  if (out.rows != n * k || out.cols != dim) out.resize(n * k, dim);
  for (int i = 0; i < n; ++i) {
    const float* src = hist.row(i);
    for (int j = 0; j < k; ++j)
      std::memcpy(out.row(i * k + j), src + j * dim,
                  sizeof(float) * static_cast<std::size_t>(dim));
  }
}

void scatter_embeddings(const MatF& emb, int n, int k, int embed,
                        int slot_offset, MatF& backbone_in) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j)
      std::memcpy(backbone_in.row(i) + (slot_offset + j) * embed,
                  emb.row(i * k + j),
                  sizeof(float) * static_cast<std::size_t>(embed));
}

void gather_embedding_grads(const MatF& d_backbone_in, int n, int k, int embed,
                            int slot_offset, MatF& d_emb) {
  if (d_emb.rows != n * k || d_emb.cols != embed) d_emb.resize(n * k, embed);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j)
      std::memcpy(d_emb.row(i * k + j),
                  d_backbone_in.row(i) + (slot_offset + j) * embed,
                  sizeof(float) * static_cast<std::size_t>(embed));
}

}  // namespace

HistoryCore::HistoryCore(const PidmShape& shape, util::Rng& rng)
    : shape_(shape) {
  proprio_encoder = nn::MlpF::he_init(
      nn::mlp_spec(shape.proprio_dim, shape.encoder_hidden, shape.embed,
                   nn::Act::Elu),
      rng);
  action_encoder = nn::MlpF::he_init(
      nn::mlp_spec(shape.action_dim, shape.encoder_hidden, shape.embed,
                   nn::Act::Elu),
      rng);
  backbone = nn::MlpF::he_init(
      nn::mlp_spec(shape.backbone_in(), shape.backbone_hidden, shape.embed,
                   nn::Act::Elu),
      rng);
}

const MatF& HistoryCore::forward(const MatF& frames, const MatF& actions,
                                 const MatF& extra,
                                 HistoryCoreCache& c) const {
  const int n = frames.rows;
  const int k = shape_.k_hist;
  if (frames.cols != shape_.frames_cols() ||
      actions.cols != shape_.actions_cols() || extra.cols != shape_.embed ||
      actions.rows != n || extra.rows != n)
    throw util::ConfigError("history core: input shape mismatch");
  c.n = n;
  gather_timesteps(frames, k, shape_.proprio_dim, c.pframes);
  gather_timesteps(actions, k, shape_.action_dim, c.aframes);
  const MatF& pemb = proprio_encoder.forward(c.pframes, c.penc);
  const MatF& aemb = action_encoder.forward(c.aframes, c.aenc);
  if (c.backbone_in.rows != n || c.backbone_in.cols != shape_.backbone_in())
    c.backbone_in.resize(n, shape_.backbone_in());
  scatter_embeddings(pemb, n, k, shape_.embed, 0, c.backbone_in);
  scatter_embeddings(aemb, n, k, shape_.embed, k, c.backbone_in);
  for (int i = 0; i < n; ++i)
    std::memcpy(c.backbone_in.row(i) + 2 * k * shape_.embed, extra.row(i),
                sizeof(float) * static_cast<std::size_t>(shape_.embed));
  return backbone.forward(c.backbone_in, c.bb);
}

void HistoryCore::backward(HistoryCoreCache& c, const MatF& d_out,
                           HistoryCoreGrads& g, MatF& d_extra) const {
  const int n = c.n;
  const int k = shape_.k_hist;
  backbone.backward(c.bb, d_out, g.backbone, &c.d_backbone_in);
  gather_embedding_grads(c.d_backbone_in, n, k, shape_.embed, 0, c.d_pemb);
  gather_embedding_grads(c.d_backbone_in, n, k, shape_.embed, k, c.d_aemb);
  if (d_extra.rows != n || d_extra.cols != shape_.embed)
    d_extra.resize(n, shape_.embed);
  for (int i = 0; i < n; ++i)
    std::memcpy(d_extra.row(i), c.d_backbone_in.row(i) + 2 * k * shape_.embed,
                sizeof(float) * static_cast<std::size_t>(shape_.embed));
  proprio_encoder.backward(c.penc, c.d_pemb, g.proprio);
  action_encoder.backward(c.aenc, c.d_aemb, g.action);
}

HistoryCoreGrads HistoryCore::make_grads() const {
  return {proprio_encoder.make_grads(), action_encoder.make_grads(),
          backbone.make_grads()};
}

std::vector<std::span<float>> HistoryCore::param_blobs() {
  std::vector<std::span<float>> out;
  for (auto& b : proprio_encoder.param_blobs()) out.push_back(b);
  for (auto& b : action_encoder.param_blobs()) out.push_back(b);
  for (auto& b : backbone.param_blobs()) out.push_back(b);
  return out;
}

void HistoryCore::save_into(nn::CheckpointWriter& w) const {
  w.add_net("proprio_encoder", proprio_encoder);
  w.add_net("action_encoder", action_encoder);
  w.add_net("backbone", backbone);
}

void HistoryCore::load_from(const nn::Checkpoint& ck) {
  ck.load_net("proprio_encoder", proprio_encoder);
  ck.load_net("action_encoder", action_encoder);
  ck.load_net("backbone", backbone);
}

PidmNet::PidmNet(const PidmShape& shape, util::Rng& rng)
    : core_(shape, rng) {
  delta_encoder = nn::MlpF::he_init(
      nn::mlp_spec(shape.proprio_dim, shape.encoder_hidden, shape.embed,
                   nn::Act::Elu),
      rng);
  // Down-scaled head keeps initial outputs near the range midpoint, where
  // the bounded sigmoid still has gradient.
  decoder = nn::MlpF::he_init(
      nn::mlp_spec(shape.embed, shape.decoder_hidden, shape.action_dim,
                   nn::Act::SigSpan, shape.out_limit),
      rng, 0.1);
}

const MatF& PidmNet::forward(const MatF& frames, const MatF& actions,
                             const MatF& delta, PidmCache& c) const {
  const MatF& extra = delta_encoder.forward(delta, c.denc);
  const MatF& bbout = core_.forward(frames, actions, extra, c.core);
  return decoder.forward(bbout, c.dec);
}

void PidmNet::backward(PidmCache& c, const MatF& d_out, PidmGrads& g) const {
  decoder.backward(c.dec, d_out, g.decoder, &c.d_bbout);
  core_.backward(c.core, c.d_bbout, g.core, c.d_extra);
  delta_encoder.backward(c.denc, c.d_extra, g.delta);
}

PidmGrads PidmNet::make_grads() const {
  return {core_.make_grads(), delta_encoder.make_grads(),
          decoder.make_grads()};
}

std::vector<std::span<float>> PidmNet::param_blobs() {
  auto out = core_.param_blobs();
  for (auto& b : delta_encoder.param_blobs()) out.push_back(b);
  for (auto& b : decoder.param_blobs()) out.push_back(b);
  return out;
}

std::size_t PidmNet::param_count() const {
  return core_.proprio_encoder.param_count() +
         core_.action_encoder.param_count() + core_.backbone.param_count() +
         delta_encoder.param_count() + decoder.param_count();
}

void PidmNet::save(const std::string& path) const {
  nn::CheckpointWriter w;
  core_.save_into(w);
  w.add_net("delta_encoder", delta_encoder);
  w.add_net("decoder", decoder);
  const auto& s = shape();
  w.meta = {{"kind", "pidm"},
            {"k_hist", s.k_hist},
            {"proprio_dim", s.proprio_dim},
            {"action_dim", s.action_dim},
            {"embed", s.embed},
            {"out_limit", s.out_limit},
            {"slot_layout", "proprio oldest..newest | action oldest..newest | delta"}};
  w.write(path);
}

PidmShape PidmNet::shape_from_checkpoint(const nn::Checkpoint& ck) {
  const auto& meta = ck.meta();
  if (meta.value("kind", std::string()) != "pidm")
    throw util::CheckpointError("checkpoint is not a pidm checkpoint");
  PidmShape s;
  s.k_hist = meta.at("k_hist").get<int>();
  s.proprio_dim = meta.at("proprio_dim").get<int>();
  s.action_dim = meta.at("action_dim").get<int>();
  s.embed = meta.at("embed").get<int>();
  s.out_limit = meta.at("out_limit").get<double>();
  auto hidden_of = [&](const std::string& net) {
    std::vector<int> h;
    const auto spec = ck.net_spec(net);
    for (std::size_t i = 0; i + 1 < spec.size(); ++i) h.push_back(spec[i].out);
    return h;
  };
  s.encoder_hidden = hidden_of("proprio_encoder");
  s.backbone_hidden = hidden_of("backbone");
  s.decoder_hidden = hidden_of("decoder");
  return s;
}

PidmNet PidmNet::load(const std::string& path) {
  const auto ck = nn::Checkpoint::load(path);
  util::Rng rng(0);
  PidmNet net(shape_from_checkpoint(ck), rng);
  net.core_.load_from(ck);
  ck.load_net("delta_encoder", net.delta_encoder);
  ck.load_net("decoder", net.decoder);
  return net;
}

}  // namespace pidmrl::pidm
