#include "explore/ensemble.hpp"

#include <cmath>

#include "util/errors.hpp"

namespace pidmrl::explore {

std::vector<std::uint32_t> bootstrap_resample(
    const std::vector<std::uint32_t>& pool, std::size_t size,
    util::Rng& rng) {
  if (pool.empty() && size > 0)
    throw util::ConfigError("bootstrap_resample: empty pool");
  std::vector<std::uint32_t> out(size);
  for (std::size_t i = 0; i < size; ++i)
    out[i] = pool[rng.uniform_int(pool.size())];
  return out;
}

Ensemble::Ensemble(const pidm::PidmShape& shape, const EnsembleConfig& cfg,
                   std::uint64_t seed)
    : cfg_(cfg) {
  if (cfg.size < 2)
    throw util::ConfigError("ensemble: need at least 2 members");
  members_.reserve(cfg.size);
  for (int j = 0; j < cfg.size; ++j) {
    util::Rng rng = util::Rng(seed).split(0xe500ULL + j);
    members_.emplace_back(shape, rng);
    opts_.emplace_back(nn::OptConfig{nn::OptKind::AdamW, cfg.lr, 0.9, 0.999,
                                     1e-8, cfg.weight_decay},
                       members_.back().param_blobs());
  }
}

void disagreement_from_preds(const std::vector<MatF>& preds, int act_dim,
                             std::vector<double>& sigma) {
  const int nm = static_cast<int>(preds.size());
  const int n = nm ? preds[0].rows : 0;
  sigma.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int d = 0; d < act_dim; ++d) {
      double mean = 0.0;
      for (int j = 0; j < nm; ++j) mean += preds[j].at(i, d);
      mean /= nm;
      double var = 0.0;
      for (int j = 0; j < nm; ++j) {
        const double dv = preds[j].at(i, d) - mean;
        var += dv * dv;
      }
      acc += std::sqrt(var / nm);
    }
    sigma[i] = acc / act_dim;
  }
}

void Ensemble::disagreement(const MatF& frames, const MatF& actions,
                            const MatF& delta, std::vector<double>& sigma) {
  const int n = frames.rows;
  sigma.assign(n, 0.0);
  if (n == 0) return;
  std::vector<MatF> preds(size());
  pidm::PidmCache cache;
  for (int j = 0; j < size(); ++j)
    preds[j] = members_[j].forward(frames, actions, delta, cache);
  disagreement_from_preds(preds, members_[0].shape().action_dim, sigma);
}

std::vector<std::vector<double>> Ensemble::train(
    const sim::Dataset& data, const pidm::WindowSet& ws,
    const std::vector<std::uint32_t>& train_pool, util::Rng& rng) {
  MatF frames, actions, delta, label, d_out;
  pidm::PidmCache cache;
  std::vector<std::vector<double>> losses(size());
  for (int j = 0; j < size(); ++j) {
    auto sample = bootstrap_resample(train_pool, train_pool.size(), rng);
    pidm::PidmGrads grads = members_[j].make_grads();
    const std::size_t bs = static_cast<std::size_t>(cfg_.batch_size);
    for (int epoch = 0; epoch < cfg_.retrain_epochs; ++epoch) {
      rng.shuffle(sample);
      const std::size_t nb = std::max<std::size_t>(1, sample.size() / bs);
      double epoch_loss = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t count = std::min(bs, sample.size() - b * bs);
        if (count == 0) break;
        pidm::fill_batch(data, ws, sample, b * bs, count, frames, actions,
                         delta, label);
        const MatF& pred = members_[j].forward(frames, actions, delta, cache);
        const float loss = nn::l1_loss(pred, label, &d_out);
        if (!std::isfinite(loss))
          throw util::TrainingDivergence("ensemble: non-finite loss");
        epoch_loss += loss;
        grads.zero();
        members_[j].backward(cache, d_out, grads);
        std::vector<std::span<float>> gb;
        for (auto& g : grads.core.proprio.blobs()) gb.push_back(g);
        for (auto& g : grads.core.action.blobs()) gb.push_back(g);
        for (auto& g : grads.core.backbone.blobs()) gb.push_back(g);
        for (auto& g : grads.delta.blobs()) gb.push_back(g);
        for (auto& g : grads.decoder.blobs()) gb.push_back(g);
        std::vector<std::span<const float>> cgb(gb.begin(), gb.end());
        opts_[j].step(members_[j].param_blobs(), cgb);
      }
      losses[j].push_back(epoch_loss / nb);
    }
  }
  trained_ = true;
  return losses;
}

}  // namespace pidmrl::explore
